"""``aurec`` command-line interface.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
With ``--format machine`` every output line is a record of space-separated
``key=value`` pairs whose first pair is ``record=<kind>``.
"""

from __future__ import annotations

import argparse
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np

from . import pipeline
from .bundle import load_bundle, save_bundle
from .config import Config, parse_config
from .dataset import ManifestRecord, load_sequence, read_manifest
from .errors import DataError, NumericError
from .synth import DEFAULT_EXPRESSIONS, default_spec, synth_generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class Out:
    """Text or machine-readable line writer."""

    def __init__(self, fmt, stream=None):
        self.machine = fmt == "machine"
        self.stream = stream or sys.stdout

    def record(self, kind, **kv):
        if self.machine:
            parts = [f"record={kind}"] + [f"{k}={_fmt_value(v)}" for k, v in kv.items()]
            print(" ".join(parts), file=self.stream)

    def text(self, line=""):
        if not self.machine:
            print(line, file=self.stream)


def _fmt_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, frozenset, set)):
        return ",".join(str(x) for x in v) or "-"
    return str(v)


def parse_records(text):
    """Machine-readable lines -> list of dicts (values stay strings)."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        rec = {}
        for part in line.split():
            k, sep, v = part.partition("=")
            if not sep:
                raise DataError(f"records line {lineno}: expected key=value, got {part!r}")
            rec[k] = v
        if "record" not in rec:
            raise DataError(f"records line {lineno}: missing record=<kind>")
        out.append(rec)
    return out


def _load_config(args):
    cfg = Config()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise DataError(f"config: {exc}") from None
        cfg = parse_config(text, cfg)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _read_manifest(path):
    try:
        return read_manifest(path)
    except OSError as exc:
        raise DataError(f"manifest: {exc}") from None


# ---------------------------------------------------------------- commands

def cmd_synth(args, out):
    spec = default_spec(args.region, t=args.frames, noise=args.noise)
    if args.expressions:
        spec.expressions = DEFAULT_EXPRESSIONS[args.region]
    seed = 0 if args.seed is None else args.seed
    m = synth_generate(spec, args.n_per_class, seed, args.out, force=args.force)
    out.text(f"wrote {len(m)} sequences ({len(spec.classes())} classes) to {args.out}")
    out.record("synth", sequences=len(m), classes=len(spec.classes()), out=args.out)


def _print_timings(out, timings):
    out.text("stage timings:")
    for stage, sec in timings.items():
        out.text(f"  {stage:<24s} {sec:8.2f} s")
        out.record("timing", stage=stage.replace(" ", "_"), seconds=round(sec, 3))


def cmd_train(args, out):
    cfg = _load_config(args)
    manifest = _read_manifest(args.manifest)
    bundle, timings = pipeline.train_manifest(manifest, cfg, args.jobs)
    t0 = time.perf_counter()
    save_bundle(bundle, args.output)
    timings["write bundle"] = time.perf_counter() - t0
    out.text(f"trained {len(bundle.aus)} AUs on {len(manifest)} sequences; "
             f"fusion loss {bundle.net.final_loss:.6g}")
    out.record("train", aus=bundle.aus, sequences=len(manifest), loss=bundle.net.final_loss,
               bundle=args.output)
    _print_timings(out, timings)


def cmd_predict(args, out):
    bundle = load_bundle(args.bundle)
    region = args.region or bundle.config.region
    record = ManifestRecord(args.sequence, args.landmarks, region, None)
    seq = pipeline._stage("load", args.sequence, load_sequence, record)
    t0 = time.perf_counter()
    f = pipeline.process_sequence(seq, bundle.config, args.sequence)
    p = pipeline.predict_features(bundle, f)
    elapsed = time.perf_counter() - t0
    out.text(f"AUs: {' '.join(f'AU{a}' for a in sorted(p.aus)) or '(none)'}")
    out.record("prediction", aus=sorted(p.aus))
    for a, o in zip(bundle.aus, p.outputs):
        out.text(f"  AU{a:<4d} output {o:.4f}")
        out.record("output", au=a, value=float(o))
    if args.scores:
        n = len(bundle.aus)
        for i, s in enumerate(p.scores):
            bank = "geo" if i < n else "app"
            out.text(f"  score {bank} AU{bundle.aus[i % n]} {s:.6g}")
            out.record("score", bank=bank, au=bundle.aus[i % n], value=float(s))
    if p.expression is not None:
        out.text(f"expression: {p.expression}")
        out.record("expression", label=p.expression)
    out.text(f"time: {elapsed:.3f} s")


def print_report(out, rep):
    if rep.n:
        out.text(f"{'Recognized AUs':<16s}{'True':>8s}{'Missing/extra':>15s}{'False':>8s}")
        for cls, c in rep.tally.items():
            out.text(f"{cls:<16s}{c['true']:>8d}{c['missing_or_extra']:>15d}{c['false']:>8d}")
            out.record("tally", **{"class": cls}, true=c["true"], missing_or_extra=c["missing_or_extra"],
                       false=c["false"], spurious=c["spurious"])
        out.text(f"R = {100 * rep.r:.1f}%  F = {100 * rep.f:.1f}%  (n = {rep.n})")
        out.record("summary", n=rep.n, R=rep.r, F=rep.f)
    if rep.confusion is None:
        return
    classes = rep.expressions
    out.text("")
    out.text("confusion (rows true, columns predicted):")
    out.text(" " * 10 + "".join(f"{c[:8]:>9s}" for c in classes))
    for i, c in enumerate(classes):
        out.text(f"{c:<10s}" + "".join(f"{v:>9d}" for v in rep.confusion[i]))
        for j, d in enumerate(classes):
            out.record("confusion", true=c, pred=d, count=int(rep.confusion[i, j]))
    out.text(f"{'class':<10s}{'TPR':>8s}{'FPR':>8s}{'Prec':>8s}{'AUC':>8s}")
    for i, c in enumerate(classes):
        m = rep.class_metrics[i]
        auc = rep.auc[i] if rep.auc else float("nan")
        out.text(f"{c:<10s}{m.tpr:8.3f}{m.fpr:8.3f}{m.precision:8.3f}{auc:8.3f}")
        out.record("class_metrics", **{"class": c}, tpr=m.tpr, fpr=m.fpr, precision=m.precision, auc=auc)
    out.text(f"accuracy = {100 * rep.accuracy:.2f}%")
    out.record("accuracy", value=rep.accuracy)


def report_from_record_text(text):
    recs = parse_records(text)
    tally = {}
    cells = {}
    aucs = {}
    for r in recs:
        if r["record"] == "tally":
            tally[r["class"]] = Counter({k: int(r.get(k, 0)) for k in
                                        pipeline.TALLY_KEYS + ("spurious",)})
        elif r["record"] == "confusion":
            cells[(r["true"], r["pred"])] = int(r["count"])
        elif r["record"] == "class_metrics" and "auc" in r:
            aucs[r["class"]] = float(r["auc"])
    confusion = classes = None
    if cells:
        classes = list(dict.fromkeys([t for t, _ in cells] + [p for _, p in cells]))
        confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for (t, p), v in cells.items():
            confusion[classes.index(t), classes.index(p)] = v
    rep = pipeline.report_from_records(tally, confusion, classes)
    if aucs and classes:
        rep.auc = [aucs.get(c, float("nan")) for c in classes]
    return rep


def cmd_eval(args, out):
    if args.records:
        try:
            text = Path(args.records).read_text()
        except OSError as exc:
            raise DataError(f"records: {exc}") from None
        rep = report_from_record_text(text)
    else:
        if not args.bundle or not args.manifest:
            raise UsageError("eval needs BUNDLE and MANIFEST, or --records FILE")
        bundle = load_bundle(args.bundle)
        feats = pipeline.extract_manifest(_read_manifest(args.manifest), bundle.config, args.jobs)
        rep, _ = pipeline.evaluate(bundle, feats)
    print_report(out, rep)


def cmd_rules_train(args, out):
    bundle = load_bundle(args.bundle)
    feats = pipeline.extract_manifest(_read_manifest(args.manifest), bundle.config, args.jobs)
    seed = bundle.config.seed if args.seed is None else args.seed
    pipeline.train_rules(bundle, feats, seed)
    save_bundle(bundle, args.output or args.bundle)
    out.text(bundle.rules.format().rstrip())
    out.record("rules", count=len(bundle.rules.rules), default=bundle.rules.default)


def cmd_inspect(args, out):
    b = load_bundle(args.bundle)
    cfg = b.config
    out.text(f"bundle version {b.version}, region {cfg.region}, seed {cfg.seed}")
    out.record("bundle", version=b.version, region=cfg.region, seed=cfg.seed, aus=b.aus)
    out.text(f"AUs: {' '.join(f'AU{a}' for a in b.aus)}")
    for key, s in sorted(b.spaces.items()):
        out.text(f"space {key}: {s.bucketing.n_states} states, k = {s.k}")
        out.record("space", key=key, states=s.bucketing.n_states, k=s.k)
    for m in b.geo_models + b.app_models:
        comps = [g.n_components for g in m.gmms]
        out.record("hmm", au=m.au, bank=m.bank, states=m.n_states, components=comps)
    out.text(f"HMMs: {len(b.geo_models)} geometric + {len(b.app_models)} appearance")
    out.text(f"fusion net: {b.net.n_inputs} inputs, {b.net.w1.shape[0]} hidden, {b.net.n_outputs} outputs, "
             f"loss {b.net.final_loss:.6g}")
    out.record("net", inputs=b.net.n_inputs, hidden=b.net.w1.shape[0], outputs=b.net.n_outputs,
               loss=b.net.final_loss)
    if b.rules is not None:
        out.text("rules:")
        out.text(b.rules.format().rstrip())
        out.record("rules", count=len(b.rules.rules), default=b.rules.default)
    if args.config_dump:
        for k, v in cfg.to_dict().items():
            out.text(f"  {k} = {v}")


# ---------------------------------------------------------------- parser

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--config", default=argparse.SUPPRESS, help="key = value config file")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("text", "machine"), default=argparse.SUPPRESS)

    p = _Parser(prog="aurec", description="Facial action unit recognition from image sequences.",
                parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    s.add_argument("out")
    s.add_argument("--region", choices=("upper", "lower"), default="lower")
    s.add_argument("--n-per-class", type=int, default=40)
    s.add_argument("--frames", type=int, default=9)
    s.add_argument("--noise", type=float, default=0.01)
    s.add_argument("--expressions", action="store_true", help="label classes with expressions")
    s.add_argument("--force", action="store_true", help="replace a non-empty output directory")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", parents=[common], help="train a model bundle")
    s.add_argument("manifest")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="recognize AUs in one sequence")
    s.add_argument("bundle")
    s.add_argument("sequence", help="directory of PGM frames")
    s.add_argument("landmarks", help="initial landmark file")
    s.add_argument("--region", choices=("upper", "lower"))
    s.add_argument("--scores", action="store_true", help="print the HMM score vector")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("eval", parents=[common], help="evaluate on a labelled manifest")
    s.add_argument("bundle", nargs="?")
    s.add_argument("manifest", nargs="?")
    s.add_argument("--records", help="recompute the report from machine-readable records")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("rules-train", parents=[common], help="induce expression rules")
    s.add_argument("bundle")
    s.add_argument("manifest")
    s.add_argument("-o", "--output", help="output bundle (default: overwrite)")
    s.set_defaults(func=cmd_rules_train)

    s = sub.add_parser("inspect", parents=[common], help="summarize a model bundle")
    s.add_argument("bundle")
    s.add_argument("--config-dump", action="store_true")
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        for name, default in (("seed", None), ("config", None), ("jobs", 1), ("format", "text")):
            if not hasattr(args, name):
                setattr(args, name, default)
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        args.func(args, Out(args.format))
    except UsageError as exc:
        print(f"aurec: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"aurec: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"aurec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"aurec: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
