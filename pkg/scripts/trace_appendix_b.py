"""Print the first training iteration of the worked example beside the printed values."""

import sys

from gmf_gcnn.experiments import run_appendixB_trace


def main():
    rep = run_appendixB_trace()
    for r in rep.rows:
        flag = "ok" if r.ok else "FAIL"
        print(f"{r.name:>10}[{r.index}] computed {r.computed:+.5f} printed {r.printed:+.5f} {flag} {r.note}")
    return 0 if rep.passed else 2


if __name__ == "__main__":
    sys.exit(main())
