"""How much can any mask head gain over plain boxes on jittered proposals?

Compares box-only regions, ground-truth masks resampled into each proposal
(the best a head of this resolution can do) and heads trained at a few
lambdas, all evaluated on the same proposals.

    python demos/oracle_ceiling.py [--seed 0] [--m 28] [--lambdas 1,100,1000]
"""
import argparse
import time

from edgemask.experiment import (SweepConfig, box_predictions, derive_seed, evaluate,
                                 oracle_roi_predictions, run_sweep, sweep_corpus)

parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--m", type=int, default=28)
parser.add_argument("--lambdas", default="1,100,1000")
parser.add_argument("--train-pages", type=int, default=40)
parser.add_argument("--test-pages", type=int, default=10)
parser.add_argument("--iters", type=int, default=1000)
args = parser.parse_args()

cfg = SweepConfig(train_pages=args.train_pages, test_pages=args.test_pages, m=args.m,
                  iterations=args.iters, seed=args.seed)
train_pages, test_pages = sweep_corpus(cfg)
test_seed = derive_seed(cfg.seed, 2)


def line(name, rep):
    w = rep.wer
    print(f"{name:16s} WER {w.wer:.4f}  boundary WER {w.boundary_wer:.4f}  mean IoU {rep.mean_iou:.4f}")


print(f"{len(test_pages)} test pages, proposals jittered by up to {cfg.jitter} px\n")
line("box only", evaluate(test_pages, box_predictions(test_pages, cfg.jitter, test_seed), cfg.k_eval))
for m in sorted({args.m, 2 * args.m}):
    preds = oracle_roi_predictions(test_pages, m, cfg.jitter, test_seed)
    line(f"true mask m={m}", evaluate(test_pages, preds, cfg.k_eval))

start = time.perf_counter()
lams = [float(v) for v in args.lambdas.split(",")]
result = run_sweep(train_pages, test_pages, lams, cfg, baseline=False)
for row in result.rows:
    line(f"trained lam={row.lam:g}", row.report)
print(f"\ntraining and evaluation took {time.perf_counter() - start:.0f} s")
print("a proposal that cuts into an article cannot be repaired by its mask, so the "
      "true-mask rows bound what any lambda can achieve here")
