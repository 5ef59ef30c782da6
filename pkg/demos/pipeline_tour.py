"""Generate pages, train a mask head, segment, digitize and score.

    python demos/pipeline_tour.py [--lam 100] [--iters 600]
"""
import argparse

from edgemask.digitize import DigitizeConfig, assemble, digitize_page, emit
from edgemask.experiment import box_predictions, evaluate, segment_pages
from edgemask.synthcorpus import generate_corpus
from edgemask.toyseg import TrainConfig, roi_samples, train

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--lam", type=float, default=100.0)
parser.add_argument("--iters", type=int, default=600)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

pages = generate_corpus(14, seed=args.seed)
train_pages, test_pages = pages[:12], pages[12:]
print(f"{len(train_pages)} training pages, {len(test_pages)} test pages, "
      f"{sum(len(p.articles()) for p in pages)} articles in total")

cfg = TrainConfig(lam=args.lam, iterations=args.iters, seed=args.seed)
params, report = train(roi_samples(train_pages, cfg.m, cfg.proposal_jitter, args.seed), cfg)
print(f"trained lambda={args.lam:g}: mean loss {report.initial_mean_loss:.4f} -> "
      f"{report.final_mean_loss:.4f} in {report.wall_time:.1f} s")

preds = segment_pages(params, test_pages, cfg, cfg.proposal_jitter, args.seed + 1)
ours = evaluate(test_pages, preds)
boxes = evaluate(test_pages, box_predictions(test_pages, cfg.proposal_jitter, args.seed + 1))
for name, rep in (("mask head", ours), ("box only", boxes)):
    w = rep.wer
    print(f"{name:10s} WER {w.wer:.4f}  boundary WER {w.boundary_wer:.4f}  AP {rep.ap.ap:.3f}")

page = test_pages[0]
instances = [(p.source, p.page_mask(page.width, page.height)) for p in preds if p.page_id == page.page_id]
doc = assemble(page.masthead, page.date, digitize_page(page, instances, DigitizeConfig()))
md = emit(doc, "md")
print("\nfirst 25 lines of the digitized test page:\n")
print("\n".join(md.splitlines()[:25]))
