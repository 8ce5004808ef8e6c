"""Plan-found and goal-success rates of one snapshot across test-time beta values.

Usage: python scripts/beta_sweep.py RUN_DIR --iteration 20 [--betas -2,0,1,2]
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from active_mde.active_learning import LearningConfig, load_snapshot
from active_mde.evaluation import EvalConfig, eval_problems, eval_snapshot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--iteration", type=int, required=True)
    parser.add_argument("--betas", default="-2,0,1,2")
    parser.add_argument("--n-problems", type=int, default=20)
    args = parser.parse_args(argv)
    cfg = LearningConfig.from_dict(json.loads((args.run_dir / "config.json").read_text()))
    env = cfg.make_environment()
    mde = load_snapshot(env, args.run_dir / "snapshots" / f"mde_{args.iteration:03d}.json")
    problems = eval_problems(env, EvalConfig(n_test_problems=args.n_problems))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["beta_test", "plan_found_rate", "goal_success_rate_conditioned", "goal_success_rate_overall"])
    for beta in (float(b) for b in args.betas.split(",")):
        row = eval_snapshot(env, mde, EvalConfig(beta_test=beta, n_test_problems=args.n_problems), problems=problems)
        w.writerow([beta, row.plan_found_rate, row.goal_success_rate_conditioned, row.goal_success_rate_overall])
    return 0


if __name__ == "__main__":
    sys.exit(main())
