#!/usr/bin/env python3
"""Solve an LP-format model with HiGHS and write a masf solution file.

usage: highs_backend.py MODEL.lp SOLUTION.sol [REL_GAP] [TIME_LIMIT]

Exit status 3 means highspy is not importable, 4 means the model did not load.
"""
import math
import sys

STATUS = {
    "kOptimal": "optimal",
    "kInfeasible": "infeasible",
    "kUnbounded": "unbounded",
    "kUnboundedOrInfeasible": "infeasible",
    "kTimeLimit": "time_limit",
    "kIterationLimit": "node_limit",
    "kSolutionLimit": "node_limit",
}


def main(argv):
    if len(argv) < 3:
        print(__doc__, file=sys.stderr)
        return 2
    try:
        import highspy
    except ImportError:
        print("highspy is not installed", file=sys.stderr)
        return 3
    model_path, solution_path = argv[1], argv[2]
    rel_gap = float(argv[3]) if len(argv) > 3 else 1e-6
    time_limit = float(argv[4]) if len(argv) > 4 else math.inf

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", rel_gap)
    h.setOptionValue("threads", 1)
    if math.isfinite(time_limit):
        h.setOptionValue("time_limit", time_limit)
    if h.readModel(model_path) != highspy.HighsStatus.kOk:
        return 4
    h.run()
    status = STATUS.get(h.getModelStatus().name, "infeasible")
    info = h.getInfo()
    lines = [f"status {status}"]
    solution = h.getSolution()
    have_point = status in ("optimal", "time_limit", "node_limit") and solution.value_valid
    if have_point:
        lines.append(f"objective {info.objective_function_value!r}")
        bound = info.mip_dual_bound
        if not math.isfinite(bound):
            bound = info.objective_function_value
        lines.append(f"bound {bound!r}")
        lines.append(f"nodes {max(info.mip_node_count, 0)}")
        lp = h.getLp()
        for name, value in zip(lp.col_names_, solution.col_value):
            lines.append(f"{name} {value!r}")
    with open(solution_path, "w") as out:
        out.write("\n".join(lines) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
