"""Command-line entry point: ``edgemask gen|train|sweep|segment|digitize|eval``.

Every command writes a run manifest next to its output: ``manifest.json``
inside an output directory, or ``<file>.manifest.json`` beside an output
file.  The manifest echoes the full configuration and records whether the
run succeeded; outputs themselves carry no timings so reruns are
byte-identical.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .digitize import DigitizeConfig, assemble, digitize_page, emit
from .experiment import (
    SweepConfig,
    dedupe_lambdas,
    derive_seed,
    evaluate,
    gt_predictions,
    load_predictions,
    run_sweep,
    save_predictions,
    segment_pages,
)
from .synthcorpus import generate_corpus, load_corpus, save_corpus
from .synthcorpus.io import corpus_page_ids
from .toyseg import TrainConfig, load_checkpoint, roi_samples, save_checkpoint, train

log = logging.getLogger("edgemask")


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    inputs: dict
    outputs: dict
    version: str = __version__
    wall_time: float = 0.0
    status: str = "running"
    error: str | None = None
    argv: list = field(default_factory=list)

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _manifest_path(out: Path, is_dir: bool) -> Path:
    return out / "manifest.json" if is_dir else out.with_name(out.name + ".manifest.json")


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _need_corpus(path: str) -> list:
    corpus_page_ids(path)  # raises with the path when missing
    return load_corpus(path)


def cmd_gen(args) -> dict:
    out = Path(args.out)
    pages = generate_corpus(args.pages, seed=args.seed)
    (out / "pages").mkdir(parents=True, exist_ok=True)
    save_corpus(pages, out)
    return {"pages": len(pages)}


def cmd_train(args) -> dict:
    pages = _need_corpus(args.corpus)
    if not pages:
        raise ValueError(f"corpus {args.corpus} has no pages")
    cfg = TrainConfig(lam=args.lam, iterations=args.iters, k=args.k, m=args.m, seed=args.seed,
                      learning_rate=args.lr, proposal_jitter=args.jitter)
    samples = roi_samples(pages, cfg.m, cfg.proposal_jitter, derive_seed(args.seed, 1))
    params, report = train(samples, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out, params, cfg)
    doc = asdict(report)
    doc.pop("wall_time")
    _write_json(out.with_name(out.name + ".report.json"), doc)
    return {"rois": len(samples), "initial_mean_loss": report.initial_mean_loss,
            "final_mean_loss": report.final_mean_loss, "train_seconds": report.wall_time}


def _split(pages: list, test_pages: int | None) -> tuple[list, list]:
    if len(pages) < 2:
        raise ValueError("a sweep needs at least 2 pages (train and test)")
    n_test = test_pages if test_pages is not None else max(1, round(len(pages) / 6))
    if not 1 <= n_test < len(pages):
        raise ValueError(f"--test-pages must be in 1..{len(pages) - 1}")
    return pages[:-n_test], pages[-n_test:]


def cmd_sweep(args) -> dict:
    lambdas, dupes = dedupe_lambdas(float(v) for v in args.lambdas.split(",") if v.strip())
    if dupes:
        log.warning("dropping duplicate lambda values: %s", ", ".join(f"{d:g}" for d in dupes))
    if not lambdas:
        raise ValueError("--lambdas needs at least one value")
    for lam in lambdas:
        TrainConfig(lam=lam)  # validate before any work
    train_pages, test_pages = _split(_need_corpus(args.corpus), args.test_pages)
    cfg = SweepConfig(train_pages=len(train_pages), test_pages=len(test_pages), jitter=args.jitter,
                      m=args.m, k=args.k, iterations=args.iters, learning_rate=args.lr,
                      k_eval=args.k_eval, seed=args.seed)
    result = run_sweep(train_pages, test_pages, lambdas, cfg)
    out = Path(args.out)
    _write_json(out / "report.json", result.as_dict())
    (out / "table.md").write_text(_table(result.as_dict()), encoding="utf-8")
    return {"lambdas": lambdas, "duplicates_dropped": dupes}


def _table(doc: dict) -> str:
    lines = ["| lambda | WER | CER | boundary WER | boundary CER |", "|---|---|---|---|---|"]
    for r in doc["rows"]:
        lines.append(f"| {r['lambda']:g} | {r['wer']:.4f} | {r['cer']:.4f} | "
                     f"{r['boundary_wer']:.4f} | {r['boundary_cer']:.4f} |")
    return "\n".join(lines) + "\n"


def cmd_segment(args) -> dict:
    params, saved = load_checkpoint(args.model)
    cfg = saved if saved is not None else TrainConfig()
    pages = _need_corpus(args.corpus)
    preds = segment_pages(params, pages, cfg, args.jitter, derive_seed(args.seed, 2))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_predictions(out, preds, {"model": str(args.model), "jitter": args.jitter, "seed": args.seed})
    return {"predictions": len(preds)}


def _instances(pages, preds):
    by_page: dict[str, list] = {}
    for p in preds:
        by_page.setdefault(p.page_id, []).append(p)
    unknown = sorted(set(by_page) - {p.page_id for p in pages})
    if unknown:
        raise ValueError(f"predictions refer to pages not in the corpus: {unknown[:5]}")
    return by_page


def cmd_digitize(args) -> dict:
    pages = _need_corpus(args.corpus)
    if args.gt:
        preds = gt_predictions(pages)
        cfg = DigitizeConfig(illustrations="annotations")
    else:
        preds = load_predictions(args.preds)
        cfg = DigitizeConfig(illustrations="detect")
    by_page = _instances(pages, preds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ext = "html" if args.format == "html" else "md"
    written = []
    for i, page in enumerate(pages):
        inst = [(p.source or f"p{j}", p.page_mask(page.width, page.height))
                for j, p in enumerate(by_page.get(page.page_id, []))]
        doc = assemble(page.masthead, page.date, digitize_page(page, inst, cfg, i))
        path = out / f"{page.page_id}.{ext}"
        path.write_text(emit(doc, args.format), encoding="utf-8")
        written.append(path.name)
    return {"documents": written}


def cmd_eval(args) -> dict:
    pages = _need_corpus(args.corpus)
    preds = load_predictions(args.preds)
    report = evaluate(pages, preds, args.k_eval)
    _write_json(Path(args.out), report.as_dict())
    w = report.wer
    return {"wer": w.wer, "cer": w.cer, "boundary_wer": w.boundary_wer, "ap": report.ap.ap}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgemask", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"edgemask {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--pages", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen, out_is_dir=True)

    p = sub.add_parser("train", help="train the mask head")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=100.0)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=28)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--jitter", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train, out_is_dir=False)

    p = sub.add_parser("sweep", help="train and evaluate one model per lambda")
    p.add_argument("--corpus", required=True)
    p.add_argument("--lambdas", default="1,10,30,100,1000")
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=28)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--jitter", type=int, default=4)
    p.add_argument("--k-eval", type=int, default=8)
    p.add_argument("--test-pages", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep, out_is_dir=True)

    p = sub.add_parser("segment", help="predict article masks on a corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--jitter", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment, out_is_dir=False)

    p = sub.add_parser("digitize", help="write accessible documents per page")
    p.add_argument("--corpus", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preds")
    src.add_argument("--gt", action="store_true")
    p.add_argument("--format", choices=("html", "md"), default="html")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_digitize, out_is_dir=True)

    p = sub.add_parser("eval", help="score predictions against the corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--k-eval", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval, out_is_dir=False)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr)
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    config = {k: v for k, v in vars(args).items() if k not in ("func", "out_is_dir")}
    inputs = {k: config[k] for k in ("corpus", "model", "preds") if config.get(k)}
    manifest = RunManifest(args.command, config, config.get("seed"), inputs, {"out": args.out},
                           argv=argv)
    mpath = _manifest_path(Path(args.out), args.out_is_dir)
    start = time.perf_counter()
    try:
        summary = args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        manifest.status, manifest.error = "failed", f"{type(exc).__name__}: {exc}"
        manifest.wall_time = time.perf_counter() - start
        try:
            manifest.write(mpath)
        except OSError:
            pass
        log.error("%s failed: %s", args.command, exc)
        return 1
    manifest.status = "ok"
    manifest.outputs.update(summary)
    manifest.wall_time = time.perf_counter() - start
    manifest.write(mpath)
    return 0


if __name__ == "__main__":
    sys.exit(main())
