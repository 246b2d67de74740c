"""Command-line front end.

One subcommand per capability: stream compression, entropy probes,
interactive-style prediction, the PPM baseline, compression distances,
compression-based classification, the lossy image codec, the HTTP
service, and a report generator that renders benchmark figures next to
their CSV tables.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import distances, engine, lossy, pnm, ppm, shapes, synth
from .classify import amdl_classify, bcn_classify, smdl_classify, smdl_train
from .config import Config, level_table_log2, parse_config
from .errors import CmxError, InvalidInputError
from .service import DEFAULT_PORT

__all__ = ["main"]

_DIST = {
    "c": distances.d_c,
    "e1": distances.d_e1,
    "e2": distances.d_e2,
    "ncd": distances.d_ncd,
    "cdm": distances.d_cdm,
}


def _read(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path: str, blob: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(blob)


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--config", metavar="FILE", help="key=value config file"
    )
    sub.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        dest="overrides",
        help="override one config key (repeatable)",
    )
    sub.add_argument(
        "--level",
        type=int,
        metavar="N",
        help="memory level 0..8 (counter table 2^(14+N) cells)",
    )
    sub.add_argument(
        "--ekf",
        action="store_true",
        help="use the Kalman-filter second-layer update",
    )


def _build_config(args: argparse.Namespace) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh, cfg)
    if getattr(args, "level", None) is not None:
        cfg = cfg.replace(table_log2=level_table_log2(args.level))
    if getattr(args, "ekf", False):
        cfg = cfg.replace(second_layer="ekf")
    if getattr(args, "overrides", None):
        cfg = parse_config(args.overrides, cfg)
    return cfg


def _trained_predictor(args: argparse.Namespace) -> engine.Predictor:
    p = engine.Predictor(_build_config(args))
    for path in args.train or []:
        p.train(_read(path))
    return p


# ---------------------------------------------------------------- commands


def _cmd_compress(args) -> int:
    data = _read(args.input)
    blob = engine.compress(data, _build_config(args))
    _write(args.output, blob)
    print(f"{len(data)} -> {len(blob)} bytes")
    return 0


def _cmd_decompress(args) -> int:
    data = engine.decompress(_read(args.input), _build_config(args))
    _write(args.output, data)
    print(f"{len(data)} bytes")
    return 0


def _cmd_entropy(args) -> int:
    p = _trained_predictor(args)
    print(f"{p.cross_entropy_of(_read(args.file)):.6f}")
    return 0


def _cmd_predict(args) -> int:
    p = _trained_predictor(args)
    print(p.predict_next_chars(args.n))
    return 0


def _cmd_ppm_entropy(args) -> int:
    print(f"{ppm.ppm_entropy(_read(args.file), args.k):.6f}")
    return 0


def _cmd_dist(args) -> int:
    fn = _DIST[args.metric]
    print(f"{fn(_read(args.a), _read(args.b)):.6f}")
    return 0


def _looks_like_image(path: str, blob: bytes) -> bool:
    if path.lower().endswith((".pgm", ".ppm", ".pnm")):
        return True
    return blob[:2] in (b"P2", b"P5", b"P6") and blob[2:3] in b" \t\r\n"


def _classify_bytes(path: str, n_measurements: int) -> bytes:
    """File contents, with shapes rendered as their ray-length series."""
    blob = _read(path)
    if _looks_like_image(path, blob):
        img = pnm.read_pnm_bytes(blob)
        if img.ndim == 3:
            img = pnm.luma(img)
        return shapes.shape_to_series(img, n_measurements)
    return blob


def _labeled_dir(root: str, n_measurements: int):
    """{class label: [file bytes]} from one subdirectory per class."""
    classes: dict[str, list[bytes]] = {}
    for label in sorted(os.listdir(root)):
        sub = os.path.join(root, label)
        if not os.path.isdir(sub):
            continue
        classes[label] = [
            _classify_bytes(os.path.join(sub, name), n_measurements)
            for name in sorted(os.listdir(sub))
            if os.path.isfile(os.path.join(sub, name))
        ]
    if not classes:
        raise InvalidInputError(
            f"{root!r} holds no class subdirectories"
        )
    return classes


def _test_files(root: str, n_measurements: int):
    """(display name, true label or None, bytes) per test file."""
    entries = sorted(os.listdir(root))
    subdirs = [e for e in entries if os.path.isdir(os.path.join(root, e))]
    out = []
    if subdirs:
        for label in subdirs:
            sub = os.path.join(root, label)
            for name in sorted(os.listdir(sub)):
                path = os.path.join(sub, name)
                if os.path.isfile(path):
                    out.append(
                        (
                            f"{label}/{name}",
                            label,
                            _classify_bytes(path, n_measurements),
                        )
                    )
    else:
        for name in entries:
            path = os.path.join(root, name)
            if os.path.isfile(path):
                out.append(
                    (name, None, _classify_bytes(path, n_measurements))
                )
    if not out:
        raise InvalidInputError(f"{root!r} holds no test files")
    return out


def _cmd_classify(args) -> int:
    cfg = _build_config(args)
    classes = _labeled_dir(args.train, args.measurements)
    tests = _test_files(args.test, args.measurements)
    blobs = [t[2] for t in tests]
    if args.method == "smdl":
        models = smdl_train(classes, cfg)
        predicted = [smdl_classify(models, b)[0] for b in blobs]
    elif args.method == "amdl":
        predicted = amdl_classify(classes, blobs, cfg)
    else:
        predicted = bcn_classify(classes, blobs, cfg)
    for (name, _, _), label in zip(tests, predicted):
        print(f"{name}\t{label}")
    truths = [t[1] for t in tests]
    if all(t is not None for t in truths):
        labels = sorted(classes)
        counts = {
            (t, p): 0 for t in labels for p in labels
        }
        hits = 0
        for t, p in zip(truths, predicted):
            counts[(t, p)] = counts.get((t, p), 0) + 1
            hits += t == p
        print()
        print("\t" + "\t".join(labels))
        for t in labels:
            row = "\t".join(str(counts.get((t, p), 0)) for p in labels)
            print(f"{t}\t{row}")
        print(f"accuracy\t{hits}/{len(tests)}")
    return 0


def _image_files(root: str) -> list[str]:
    paths = [
        os.path.join(root, name)
        for name in sorted(os.listdir(root))
        if name.lower().endswith((".pgm", ".ppm", ".pnm"))
    ]
    if not paths:
        raise InvalidInputError(f"no .pgm/.ppm images under {root!r}")
    return paths


def _cmd_lossy_train(args) -> int:
    banks = []
    channels = None
    for path in _image_files(args.images):
        img = pnm.read_pnm(path)
        ch = 3 if img.ndim == 3 else 1
        if channels is None:
            channels = ch
        elif channels != ch:
            raise InvalidInputError(
                "training images mix grayscale and color"
            )
        banks.append(lossy.extract_patches(img, args.patch))
    patches = np.concatenate(banks, axis=0)
    bank = lossy.learn_filters(
        patches,
        k=args.k,
        seed=args.seed,
        patch_size=args.patch,
        channels=channels,
    )
    _write(args.output, bank.to_bytes())
    print(f"{bank.k} filters from {len(patches)} patches -> {args.output}")
    return 0


def _cmd_lossy_encode(args) -> int:
    bank = lossy.FilterBank.from_bytes(_read(args.bank))
    img = pnm.read_pnm(args.image)
    blob = lossy.lossy_encode(img, bank)
    _write(args.output, blob)
    print(f"{img.size} pixel bytes -> {len(blob)} bytes")
    return 0


def _cmd_lossy_decode(args) -> int:
    bank = lossy.FilterBank.from_bytes(_read(args.bank))
    img = lossy.lossy_decode(_read(args.blob), bank)
    if img.ndim == 3:
        pnm.write_ppm(args.output, img)
    else:
        pnm.write_pgm(args.output, img)
    print(f"{img.shape[1]}x{img.shape[0]} -> {args.output}")
    return 0


def _cmd_serve(args) -> int:
    from .service import main as serve_main

    serve_main(port=args.port, corpus_dir=args.corpus_dir)
    return 0


# ----------------------------------------------------------------- report


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _cmd_report(args) -> int:
    """Benchmark sweep: CSV tables plus rendered figures."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(args.output, exist_ok=True)
    cfg = _build_config(args)
    corpus = synth.mixed_corpus(args.size, seed=args.seed)

    # --- cross entropy by method ------------------------------------
    rows = [("order0", ppm.ppm_entropy(corpus, 0))]
    rows.append((f"ppm-k{ppm.DEFAULT_K}", ppm.ppm_entropy(corpus)))
    chunk = max(256, args.size // 64)
    curve = []
    p = engine.Predictor(cfg.replace(second_layer="sgd"))
    for start in range(0, len(corpus), chunk):
        block = corpus[start : start + chunk]
        before = p.ce_bits
        p.train(block)
        curve.append(
            (start + len(block), (p.ce_bits - before) / len(block))
        )
    rows.append(("mixer-sgd", p.ce_bits / len(corpus)))
    pe = engine.Predictor(cfg.replace(second_layer="ekf"))
    pe.train(corpus)
    rows.append(("mixer-ekf", pe.ce_bits / len(corpus)))
    rows = [(name, round(v, 6)) for name, v in rows]
    _write_csv(
        os.path.join(args.output, "entropy.csv"),
        ("method", "bits_per_byte"),
        rows,
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar([r[0] for r in rows], [r[1] for r in rows], color="#4878a8")
    ax.set_ylabel("cross entropy (bits/byte)")
    ax.set_title(f"coding cost, {len(corpus)} byte synthetic corpus")
    fig.tight_layout()
    fig.savefig(os.path.join(args.output, "entropy.png"), dpi=120)
    plt.close(fig)

    # --- adaptation curve --------------------------------------------
    _write_csv(
        os.path.join(args.output, "learning_curve.csv"),
        ("bytes_seen", "bits_per_byte"),
        [(n, round(v, 6)) for n, v in curve],
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([n for n, _ in curve], [v for _, v in curve])
    ax.set_xlabel("bytes seen")
    ax.set_ylabel("block cross entropy (bits/byte)")
    ax.set_title("online adaptation")
    fig.tight_layout()
    fig.savefig(os.path.join(args.output, "learning_curve.png"), dpi=120)
    plt.close(fig)

    # --- distance matrix ---------------------------------------------
    corpora = synth.class_corpus(
        3, train_docs=1, test_docs=1, doc_len=2000, seed=args.seed
    )
    docs = []
    for i, (train, test) in enumerate(corpora):
        docs.append((f"c{i}a", train[0]))
        docs.append((f"c{i}b", test[0]))
    names = [n for n, _ in docs]
    handle = distances.EngineCompressor(cfg)
    mat = np.zeros((len(docs), len(docs)))
    drows = []
    for i, (ni, di) in enumerate(docs):
        for j, (nj, dj) in enumerate(docs):
            if j < i:
                mat[i, j] = mat[j, i]
                continue
            mat[i, j] = 0.0 if i == j else distances.d_ncd(di, dj, handle)
        drows.append([ni] + [round(v, 6) for v in mat[i]])
    _write_csv(
        os.path.join(args.output, "distances.csv"),
        ["doc"] + names,
        drows,
    )
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(mat, cmap="viridis")
    ax.set_xticks(range(len(names)), names)
    ax.set_yticks(range(len(names)), names)
    ax.set_title("normalized compression distance")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(os.path.join(args.output, "distances.png"), dpi=120)
    plt.close(fig)

    print(f"report written to {args.output}")
    return 0


# ------------------------------------------------------------------ main


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cmx",
        description="context-mixing compression toolkit",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a file")
    p.add_argument("input")
    p.add_argument("output")
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_compress)

    p = sub.add_parser("decompress", help="decompress an archive")
    p.add_argument("input")
    p.add_argument("output")
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_decompress)

    p = sub.add_parser("entropy", help="adaptive cross entropy of a file")
    p.add_argument("file")
    p.add_argument("--train", nargs="+", metavar="FILE")
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_entropy)

    p = sub.add_parser("predict", help="greedy continuation after training")
    p.add_argument("--train", nargs="+", metavar="FILE", required=True)
    p.add_argument("-n", type=int, default=40, help="characters to emit")
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("ppm-entropy", help="PPM baseline cross entropy")
    p.add_argument("file")
    p.add_argument("-k", type=int, default=ppm.DEFAULT_K)
    p.set_defaults(fn=_cmd_ppm_entropy)

    p = sub.add_parser("dist", help="compression distance between files")
    p.add_argument("metric", choices=sorted(_DIST))
    p.add_argument("a")
    p.add_argument("b")
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_dist)

    p = sub.add_parser(
        "classify", help="compression-based classification"
    )
    p.add_argument(
        "--train", required=True, help="directory with one subdir per class"
    )
    p.add_argument("--test", required=True, help="directory of test files")
    p.add_argument(
        "--method", choices=("smdl", "amdl", "bcn"), default="smdl"
    )
    p.add_argument(
        "--measurements",
        type=int,
        default=40,
        help="ray samples when test files are shape images",
    )
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("lossy-train", help="learn a k-means filter bank")
    p.add_argument("images", help="directory of training images")
    p.add_argument("-k", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patch", type=int, default=lossy.DEFAULT_PATCH)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=_cmd_lossy_train)

    p = sub.add_parser("lossy-encode", help="encode an image with a bank")
    p.add_argument("image")
    p.add_argument("bank")
    p.add_argument("output")
    p.set_defaults(fn=_cmd_lossy_encode)

    p = sub.add_parser("lossy-decode", help="decode a coded image")
    p.add_argument("blob")
    p.add_argument("bank")
    p.add_argument("output")
    p.set_defaults(fn=_cmd_lossy_decode)

    p = sub.add_parser("serve", help="run the prediction service")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--corpus-dir")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser(
        "report", help="benchmark CSVs plus matplotlib figures"
    )
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--size", type=int, default=30000)
    p.add_argument("--seed", type=int, default=1)
    _add_config_flags(p)
    p.set_defaults(fn=_cmd_report)

    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except CmxError as exc:
        print(f"cmx: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
