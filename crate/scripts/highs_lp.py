#!/usr/bin/env python3
"""Solves an LP-format model with HiGHS and prints the outcome.

Usage: python3 scripts/highs_lp.py model.lp

The first line is one of `optimal`, `infeasible`, `unknown`; after
`optimal`, one `name value` line per column follows. Needs `highspy`.
"""
import sys

import highspy


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: highs_lp.py model.lp", file=sys.stderr)
        return 2
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if h.readModel(sys.argv[1]) != highspy.HighsStatus.kOk:
        print("cannot read model", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    if status in (highspy.HighsModelStatus.kOptimal, highspy.HighsModelStatus.kModelEmpty):
        print("optimal")
        lp = h.getLp()
        values = h.getSolution().col_value
        for name, value in zip(lp.col_names_, values):
            print(f"{name} {value:.6f}")
    elif status == highspy.HighsModelStatus.kInfeasible:
        print("infeasible")
    else:
        print("unknown", h.modelStatusToString(status))
    return 0


if __name__ == "__main__":
    sys.exit(main())
