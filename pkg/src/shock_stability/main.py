"""Typer CLI application for shocklab."""

import logging
from pathlib import Path
from typing import Any, Callable, Optional

# Load .env FIRST, before tolerances are read from the environment
from dotenv import find_dotenv, load_dotenv

import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from shock_stability.config import LabConfig, load_lab_config
from shock_stability.core import (
    SystemSpec,
    comparability_constants,
    compatibility_residual,
    hessian_eigenvalues,
    rayleigh_quotient_bounds,
    relative_entropy,
    symmetrizer_residual,
)
from shock_stability.errors import ShockLabError
from shock_stability.hugoniot import Family, build_curve, entropy_production, lemma_suite, rh_residual
from shock_stability.lab import (
    ExperimentConfig,
    resolve_shock,
    refinement_check,
    run_experiment,
    write_experiment,
    write_snapshots,
)
from shock_stability.solver import Simulation
from shock_stability.systems import full_euler_relative_entropy_closed_form, sample_interior, system_from_config
from shock_stability.utils import write_csv, write_json

load_dotenv(find_dotenv(usecwd=True))

app = typer.Typer(
    name="shocklab",
    help="Relative-entropy shock stability lab: curves, lemmas, solver runs and stability fits",
    add_completion=False,
    rich_markup_mode="rich",
)

console = Console()
logger = logging.getLogger("shocklab.cli")

DEFAULT_BASES = {"isentropic": [1.0, 0.0], "full_euler": [1.0, 0.0, 2.5], "scalar": [1.0]}

ConfigOption = typer.Option(..., "--config", "-c", help="Config file path or bundled preset name (e.g. isentropic_g2)")
OutOption = typer.Option(Path("shocklab-out"), "--out", "-o", help="Output directory")


@app.callback()
def main(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show debug logging"),
) -> None:
    """Relative-entropy shock stability lab."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _guard(action: Callable[[], int]) -> None:
    """Run a command body and map its outcome to the exit code."""
    try:
        code = action()
    except ShockLabError as e:
        usage = isinstance(e, ValueError)
        label = "Config Error" if usage else "Run Error"
        console.print(f"[bold red]❌ {label}:[/bold red] {e}")
        raise typer.Exit(2 if usage else 1)
    raise typer.Exit(code)


def _load(config: str) -> tuple[LabConfig, SystemSpec]:
    cfg = load_lab_config(config)
    return cfg, system_from_config(cfg)


def _parse_state(text: Optional[str], cfg: LabConfig, sys: SystemSpec) -> np.ndarray:
    if text is None:
        values = cfg.experiment.base if cfg.experiment is not None else DEFAULT_BASES[sys.kind]
    else:
        try:
            values = [float(v) for v in text.split(",")]
        except ValueError:
            raise typer.BadParameter(f"expected comma-separated numbers, got {text!r}")
    if len(values) != sys.m:
        raise typer.BadParameter(f"state needs {sys.m} components, got {len(values)}")
    return np.asarray(values, dtype=float)


# =============================================================================
# check-system
# =============================================================================


def system_audit(sys: SystemSpec, n_samples: int, rng: np.random.Generator) -> dict[str, Any]:
    """Compatibility, convexity and symmetrizer audits on random interior states."""
    states = sample_interior(sys, 2 * n_samples, rng)[:n_samples]
    compat = [compatibility_residual(sys, u) for u in states]
    eig_min = [float(hessian_eigenvalues(sys, u)[0]) for u in states]
    symm = [symmetrizer_residual(sys, u) for u in states]
    rayleigh_ok = True
    for u in states:
        lo, hi = rayleigh_quotient_bounds(sys, u)
        slack = 1e-8 * (1.0 + abs(lo) + abs(hi))
        rayleigh_ok &= bool(lo >= sys.lambda_minus(u) - slack and hi <= sys.lambda_plus(u) + slack)
    comparability = comparability_constants(sys, states[:5], states[5:25])

    audit: dict[str, Any] = {
        "system": sys.name,
        "n_states": len(states),
        "compatibility_max_residual": max(compat),
        "compatibility_ok": max(compat) <= 1e-6,
        "hessian_min_eigenvalue": min(eig_min),
        "convex_ok": min(eig_min) > 0.0,
        "symmetrizer_max_residual": max(symm),
        "rayleigh_bounds_ok": rayleigh_ok,
        "comparability": comparability,
    }
    if sys.kind == "full_euler":
        pairs = states[: len(states) // 2], states[len(states) // 2:]
        diffs = [
            abs(relative_entropy(sys, u, v) - full_euler_relative_entropy_closed_form(sys.law, u, v))
            for u, v in zip(*pairs)
        ]
        audit["closed_form_max_difference"] = max(diffs, default=0.0)
        audit["closed_form_ok"] = audit["closed_form_max_difference"] <= 1e-10
    if sys.kind == "isentropic":
        rho = np.linspace(max(sys.law.rho_min, 1e-3), min(sys.law.rho_max, 5.0), 400)
        audit["min_d2_rho_p"] = float(np.min(sys.law.d2_rho_p(rho)))
        audit["liu_convexity_ok"] = audit["min_d2_rho_p"] >= 0.0
    audit["passed"] = all(v for k, v in audit.items() if k.endswith("_ok") and k != "liu_convexity_ok")
    return audit


@app.command("check-system")
def check_system(
    config: str = ConfigOption,
    out: Path = OutOption,
    n_samples: int = typer.Option(100, "--n-samples", "-n", help="Number of random interior states"),
    seed: int = typer.Option(0, "--seed", help="Sampling seed"),
) -> None:
    """Audit entropy-pair compatibility, convexity and symmetrization."""

    def body() -> int:
        _, sys = _load(config)
        audit = system_audit(sys, n_samples, np.random.default_rng(seed))
        path = write_json(out / "audit.json", audit)

        table = Table(title=f"check-system: {sys.name}")
        table.add_column("check")
        table.add_column("value", justify="right")
        for key, value in audit.items():
            if key in ("system", "comparability"):
                continue
            table.add_row(key, f"{value:.3g}" if isinstance(value, float) else str(value))
        console.print(table)
        console.print(f"[green]✓ Audit written to:[/green] {path}")
        return 0 if audit["passed"] else 1

    _guard(body)


# =============================================================================
# shock-curve / verify-lemmas
# =============================================================================


@app.command("shock-curve")
def shock_curve(
    config: str = ConfigOption,
    out: Path = OutOption,
    base: Optional[str] = typer.Option(None, "--base", "-b", help="Base state, comma-separated conserved components"),
    family: Family = typer.Option(Family.ONE, "--family", "-f", help="Shock family"),
    s_max: float = typer.Option(1.0, "--s-max", help="Largest curve parameter"),
    n_points: int = typer.Option(21, "--n-points", help="Number of samples"),
) -> None:
    """Sample a shock curve and write it as CSV."""

    def body() -> int:
        cfg, sys = _load(config)
        u = _parse_state(base, cfg, sys)
        curve = build_curve(sys, u, family, np.linspace(0.0, s_max, n_points))
        rows = []
        for s, state, speed in zip(curve.s_grid, curve.states, curve.speeds):
            u_minus, u_plus = curve.pair(state)
            rows.append([
                float(s), *state.tolist(), float(speed),
                rh_residual(sys, u_minus, u_plus, float(speed)),
                entropy_production(sys, u_minus, u_plus, float(speed)),
            ])
        header = ["s", *sys.components, "sigma", "rh_residual", "entropy_production"]
        path = write_csv(out / "curve.csv", header, rows)
        console.print(f"[green]✓ {len(rows)} samples ({curve.method}) written to:[/green] {path}")
        return 0

    _guard(body)


@app.command("verify-lemmas")
def verify_lemmas(
    config: str = ConfigOption,
    out: Path = OutOption,
    base: Optional[str] = typer.Option(None, "--base", "-b", help="Base state, comma-separated conserved components"),
    family: Family = typer.Option(Family.ONE, "--family", "-f", help="Shock family"),
    s_max: float = typer.Option(1.0, "--s-max", help="Largest curve parameter"),
    n_grid: int = typer.Option(9, "--n-grid", help="Curve grid size for the pairwise checks"),
    seed: int = typer.Option(0, "--seed", help="Seed for the random reference states"),
) -> None:
    """Run the hypothesis checks and identity residuals along one curve."""

    def body() -> int:
        cfg, sys = _load(config)
        u = _parse_state(base, cfg, sys)
        report = lemma_suite(sys, u, family, s_max, n_grid=n_grid, rng=np.random.default_rng(seed))
        path = write_json(out / "lemmas.json", report)
        if report.passed:
            console.print(Panel.fit(f"[green]✓ All checks passed[/green] for {sys.name}", title="verify-lemmas"))
        else:
            lines = "\n".join(f"• {msg}" for msg in report.failures)
            console.print(Panel.fit(f"[bold red]{len(report.failures)} check(s) failed[/bold red]\n{lines}", title="verify-lemmas"))
            for a, b in report.hypotheses.liu_failure_intervals:
                console.print(f"[yellow]Liu failure interval:[/yellow] s in [{a:.6g}, {b:.6g}]")
        console.print(f"[dim]Report: {path}[/dim]")
        return 0 if report.passed else 1

    _guard(body)


# =============================================================================
# simulate / stability-report
# =============================================================================


def _experiment(config: str, seed: Optional[int]) -> ExperimentConfig:
    cfg, sys = _load(config)
    return ExperimentConfig.from_lab_config(cfg, sys, seed)


@app.command()
def simulate(
    config: str = ConfigOption,
    out: Path = OutOption,
    seed: Optional[int] = typer.Option(None, "--seed", help="Perturbation seed (overrides the config)"),
) -> None:
    """Run the finite-volume solver on the configured shock data."""

    def body() -> int:
        exp = _experiment(config, seed)
        resolved = resolve_shock(exp.sys, exp.shock)
        trajectory = Simulation(exp.sim_config(resolved)).run()
        paths = write_snapshots(exp.sys, trajectory, out)
        write_json(out / "metadata.json", {"system": exp.sys.name, "seed": exp.seed, **trajectory.metadata()})
        status = "[green]✓[/green]" if trajectory.within_budget else "[yellow]⚠️[/yellow]"
        console.print(
            f"{status} {trajectory.n_steps} steps to t={trajectory.final.time:.6g}; "
            f"positive entropy residual {trajectory.cumulative_positive_residual:.3g} "
            f"(budget {trajectory.entropy_budget:.3g})"
        )
        console.print(f"[green]✓ {len(paths)} snapshots written to:[/green] {out}")
        return 0 if trajectory.within_budget else 1

    _guard(body)


@app.command("stability-report")
def stability_report_cmd(
    config: str = ConfigOption,
    out: Path = OutOption,
    seed: Optional[int] = typer.Option(None, "--seed", help="Perturbation seed (overrides the config)"),
    strict: bool = typer.Option(False, "--strict", help="Exit 1 when an advisory flag fails"),
    refine: bool = typer.Option(False, "--refine", help="Rerun on 2N cells and check that C and C' agree within 20%"),
) -> None:
    """Run a perturbed-shock experiment and fit the stability envelopes."""

    def body() -> int:
        exp = _experiment(config, seed)
        result = run_experiment(exp)
        refinement = refinement_check(exp, coarse=result) if refine else None
        payload = write_experiment(result, out, refinement)
        report = payload["stability"]

        table = Table(title=f"stability: {exp.sys.name}, {exp.shock.family.value}-shock, eps={exp.eps}")
        table.add_column("quantity")
        table.add_column("value", justify="right")
        table.add_column("ok", justify="center")
        table.add_row("upstream increment excess", f"{report.left_monotone_violation:.3g}", _flag(report.monotone_ok))
        table.add_row("max upstream / eps^4", f"{report.upstream_bound_ratio:.3g}", _flag(report.upstream_bound_ok))
        table.add_row("bad set / eps", f"{report.bad_set_ratio:.3g}", _flag(report.bad_set_ok))
        table.add_row("downstream growth C", f"{report.right_growth_fit:.3g}", _flag(report.fits_finite))
        table.add_row("drift C'", f"{report.drift_fit:.3g}", _flag(report.fits_finite))
        if refinement is not None:
            ok = refinement.stable
            table.add_row(f"C change at N={refinement.n_fine}", f"{refinement.right_growth_change:.1%}", _flag(ok))
            table.add_row(f"C' change at N={refinement.n_fine}", f"{refinement.drift_change:.1%}", _flag(ok))
        console.print(table)
        console.print(f"[green]✓ Outputs written to:[/green] {out}")
        passed = report.passed and (refinement is None or refinement.stable)
        return 1 if strict and not passed else 0

    _guard(body)


def _flag(ok: bool) -> str:
    return "[green]✓[/green]" if ok else "[red]✗[/red]"


if __name__ == "__main__":
    app()
