"""Monte Carlo cross-check of the closed-form link metrics.

Loads a reference scenario, runs the time-slot simulator, and lines the
estimates up against the analytic predictions with z-scores.  Then it
shows the two properties the simulator guarantees: bit-identical
results for the same seed, and standard errors that shrink as the
square root of the slot count.

    python3 demos/simulator_cross_check.py
"""

from dataclasses import replace
from pathlib import Path

from heraldsim import (analytic_predictions, analytic_std_errs, estimate_metrics,
                       load_scenario, simulate)

SCENARIO = Path(__file__).parent / "data" / "scenario_reference.json"


def z_table(cfg) -> None:
    est = estimate_metrics(simulate(cfg), cfg)
    pred = analytic_predictions(cfg)
    print(f"{cfg.n_slots:,} slots, seed {cfg.seed}")
    print(f"  {'quantity':>8}  {'estimate':>12}  {'std err':>10}  {'analytic':>12}  {'z':>6}")
    for name in ("p_t", "p_cond", "psnr", "qber"):
        e = getattr(est, name)
        z = (e.value - pred[name]) / e.std_err
        print(f"  {name:>8}  {e.value:12.6g}  {e.std_err:10.3g}  "
              f"{pred[name]:12.6g}  {z:+6.2f}")


def determinism(cfg) -> None:
    a = simulate(cfg)
    b = simulate(cfg)
    print(f"\nsame seed, same counts: {a == b}")


def error_scaling(cfg) -> None:
    errs_1 = analytic_std_errs(cfg)
    errs_4 = analytic_std_errs(replace(cfg, n_slots=4 * cfg.n_slots))
    ratio = errs_1["p_cond"] / errs_4["p_cond"]
    print(f"4x the slots cuts the p_cond standard error by {ratio:.3f} (expect 2)")


def main() -> None:
    cfg = load_scenario(SCENARIO).sim_config()
    z_table(cfg)
    determinism(cfg)
    error_scaling(cfg)


if __name__ == "__main__":
    main()
