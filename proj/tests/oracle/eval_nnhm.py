#!/usr/bin/env python3
"""Independent NNHM reader and float32 forward pass in numpy.

Runs nnhm_dump into a temporary directory, re-evaluates every model it wrote and
compares logits and predictions with the engine's output.

    eval_nnhm.py <path to nnhm_dump>
"""

import json
import struct
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

F32 = np.float32


def read_nnhm(path):
    data = Path(path).read_bytes()
    if data[:4] != b"NNHM":
        raise ValueError("bad magic")
    version, mlen = struct.unpack_from("<IQ", data, 4)
    if version != 1:
        raise ValueError(f"version {version}")
    manifest = json.loads(data[16 : 16 + mlen].decode("utf-8"))
    blob = np.frombuffer(data[16 + mlen :], dtype="<f4")
    params = [dict() for _ in manifest["layers"]]
    for t in manifest["tensors"]:
        a = blob[t["offset"] : t["offset"] + t["count"]].reshape(t["shape"])
        params[t["layer"]][t["name"]] = a.astype(F32)
    return manifest, params


def read_idx(images, labels):
    img = Path(images).read_bytes()
    magic, n, rows, cols = struct.unpack_from(">IIII", img, 0)
    assert magic == 0x803
    x = np.frombuffer(img[16:], dtype=np.uint8).reshape(n, 1, rows, cols).astype(F32) / F32(255)
    lbl = Path(labels).read_bytes()
    assert struct.unpack_from(">II", lbl, 0) == (0x801, n)
    return x, np.frombuffer(lbl[8:], dtype=np.uint8).astype(np.int64)


def conv2d(x, w, b, stride, pad):
    n, c, h, wd = x.shape
    o, _, kh, kw = w.shape
    xp = np.zeros((n, c, h + 2 * pad, wd + 2 * pad), dtype=F32)
    xp[:, :, pad : pad + h, pad : pad + wd] = x
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=F32)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
    out = np.einsum("ockl,nckluv->nouv", w, cols, dtype=F32)
    if b is not None:
        out = out + b.reshape(1, o, 1, 1)
    return out.astype(F32)


def maxpool(x, k, s):
    n, c, h, w = x.shape
    oh, ow = (h - k) // s + 1, (w - k) // s + 1
    out = np.full((n, c, oh, ow), -np.inf, dtype=F32)
    for i in range(k):
        for j in range(k):
            win = x[:, :, i : i + s * oh : s, j : j + s * ow : s]
            # NaN wins its window
            out = np.where(np.isnan(win) | (win > out), win, out)
    return out


def in_interval(v, lo, hi):
    with np.errstate(invalid="ignore"):
        return (lo <= v) & (v <= hi)


def edac(x, layer, p):
    groups = layer["groups"]
    dup = layer["mode"] == "duplicate"
    all_channels = layer["interval_scope"] == "all-channels"
    x = np.where(np.isnan(x), F32(0), x)
    outs = []
    for k, g in enumerate(groups):
        a = x[:, g[0]]
        if dup:
            lo = p["lower"].reshape(-1)[k]
            hi = p["upper"].reshape(-1)[k]
        if len(g) == 1:
            if dup and all_channels:
                a = np.where(in_interval(a, lo, hi), a, F32(0))
            outs.append(a)
        elif len(g) == 2:
            b = x[:, g[1]]
            ia, ib = in_interval(a, lo, hi), in_interval(b, lo, hi)
            same = a.view(np.uint32) == b.view(np.uint32)
            both = np.where(same, a, np.minimum(a, b))
            outs.append(np.where(ia & ib, both, np.where(ia, a, np.where(ib, b, F32(0)))))
        else:
            b, c = x[:, g[1]], x[:, g[2]]
            ua, ub, uc = a.view(np.uint32), b.view(np.uint32), c.view(np.uint32)
            vote = np.where((ua == ub) | (ua == uc), a, np.where(ub == uc, b, np.minimum(np.minimum(a, b), c)))
            outs.append(vote)
    return np.stack(outs, axis=1).astype(F32)


def forward(manifest, params, x):
    for layer, p in zip(manifest["layers"], params):
        kind = layer["kind"]
        if kind == "conv2d":
            x = conv2d(x, p["weight"], p.get("bias"), layer["stride"], layer["padding"])
        elif kind == "fully_connected":
            x = (x @ p["weight"].T).astype(F32)
            if "bias" in p:
                x = x + p["bias"]
        elif kind == "batch_norm":
            shape = (1, -1) + (1,) * (x.ndim - 2)
            inv = F32(1) / np.sqrt(p["running_var"] + F32(layer["eps"]))
            x = (x - p["running_mean"].reshape(shape)) * inv.reshape(shape) * p["gamma"].reshape(shape) + p[
                "beta"
            ].reshape(shape)
        elif kind == "relu":
            x = np.where(x < 0, F32(0), x)
        elif kind == "max_pool":
            x = maxpool(x, layer["window"], layer["stride"])
        elif kind == "flatten":
            x = x.reshape(x.shape[0], -1)
        elif kind == "edac":
            x = edac(x, layer, p)
        else:
            raise ValueError(kind)
        x = x.astype(F32)
    return x


def main():
    dump = sys.argv[1]
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([dump, tmp], check=True)
        x, y = read_idx(Path(tmp) / "images", Path(tmp) / "labels")
        for name in ["baseline", "plain", "dup_all", "dup_only", "trip", "dup_faulty"]:
            manifest, params = read_nnhm(Path(tmp) / f"{name}.nnhm")
            ours = forward(manifest, params, x)
            theirs = np.fromfile(Path(tmp) / f"{name}.logits", dtype="<f4").reshape(ours.shape)
            with np.errstate(invalid="ignore"):
                err = np.abs(ours.astype(np.float64) - theirs) / np.maximum(np.abs(theirs), 1.0)
            # identical non-finite values count as agreement
            err[(np.isnan(ours) & np.isnan(theirs)) | (ours == theirs)] = 0.0
            err[np.isnan(err)] = np.inf
            agree = np.mean(ours.argmax(1) == theirs.argmax(1))
            acc = np.mean(theirs.argmax(1) == y)
            ok = err.max() < 1e-4 and agree == 1.0
            failures += not ok
            print(f"{name:10s} {'ok' if ok else 'MISMATCH'}  max rel logit error {err.max():.2e}  "
                  f"prediction agreement {agree:.3f}  accuracy {acc:.3f}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
