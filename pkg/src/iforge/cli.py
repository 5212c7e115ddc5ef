"""``iforge`` command-line interface.

Exit codes: 0 success, 2 configuration error, 3 failed physics check,
4 size limit exceeded.
"""

from __future__ import annotations

import csv
import functools
import io
import logging
import sys
from pathlib import Path

import click

from iforge import dimension, experiments, verify
from iforge.config import ExperimentConfig, dump_json, load_config
from iforge.errors import ConfigError, DimensionError, IforgeError, SizeLimitError, UnknownDeviceError
from iforge.fock import CoefficientTensor, Species

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_SIZE = 0, 2, 3, 4

log = logging.getLogger("iforge")


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, DimensionError, UnknownDeviceError) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except SizeLimitError as exc:
            click.echo(f"size limit: {exc}", err=True)
            sys.exit(EXIT_SIZE)
        except IforgeError as exc:
            click.echo(f"physics error: {exc}", err=True)
            sys.exit(EXIT_PHYSICS)

    return wrapper


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _config(path: str | None) -> ExperimentConfig:
    return load_config(path) if path else ExperimentConfig()


def _species(cli_value: str | None, cfg: ExperimentConfig) -> Species:
    return Species.parse(cli_value) if cli_value else cfg.species


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def parse_range(text: str | None) -> list[int] | None:
    """``"4"``, ``"2..7"`` or ``"2,3,5"`` to a list of integers."""
    if text is None:
        return None
    try:
        out = []
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise click.BadParameter(f"expected an integer, a range a..b or a comma list, got {text!r}")
    if not out:
        raise click.BadParameter(f"empty range {text!r}")
    return out


common_out = click.option("--out", type=click.Path(dir_okay=False), help="Write output here instead of stdout.")
common_seed = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Random seed.")
common_species = click.option("--species", type=click.Choice(["boson", "fermion"]), default=None)
common_config = click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file.")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Post-selected N-qudit states from scattering of identical particles."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@common_config
@common_seed
@common_out
@common_species
@_exit_codes
def simulate(config_path, seed, out, species):
    """Scatter an input state through a setup and post-select."""
    if not config_path:
        raise ConfigError("simulate needs --config")
    cfg = _config(config_path)
    if cfg.setup is None:
        raise ConfigError("setup: required for simulate")
    d, N = cfg.setup.d, cfg.setup.N
    state = cfg.input_state if cfg.input_state is not None else CoefficientTensor.basis(d, [1] * N)
    report = experiments.simulate(cfg.setup, state, _species(species, cfg), d, N, cfg.input_terms)
    report["seed"] = cfg.seed if seed is None else seed
    _emit(dump_json(report), out or cfg.output_path)


@main.command()
@common_config
@common_seed
@common_out
@common_species
@click.option("--steps", type=click.IntRange(1), default=None, help="Number of gamma points.")
@_exit_codes
def family(config_path, seed, out, species, steps):
    """Sweep the four-photon family and compare with the analytic state."""
    cfg = _config(config_path)
    sw = cfg.sweep
    grid = experiments.gamma_grid(
        0.0 if sw is None else sw.start,
        experiments.gamma_grid()[-1] if sw is None else sw.stop,
        steps or (experiments.FAMILY_STEPS if sw is None else sw.steps),
    )
    points = experiments.family_sweep(grid, _species(species, cfg))
    _emit(_csv([experiments.family_csv_row(p) for p in points], experiments.family_csv_header()), out or cfg.output_path)
    bad = [p for p in points if not p.ok]
    if bad:
        click.echo(f"family check failed at gamma = {bad[0].gamma!r} (fidelity {bad[0].fidelity!r})", err=True)
        sys.exit(EXIT_PHYSICS)


@main.command("ghz-swap")
@common_config
@common_seed
@common_out
@common_species
@click.option("--product", is_flag=True, help="Use unentangled HH pairs instead of Bell pairs.")
@_exit_codes
def ghz_swap(config_path, seed, out, species, product):
    """Project photons 1, 3, 5 onto GHZ and report the state of photons 2, 4, 6."""
    cfg = _config(config_path)
    entangled = not product and cfg.pairs == "bell"
    sp = _species(species, cfg)
    report = experiments.ghz_swap(sp, entangled)
    _emit(dump_json(report), out or cfg.output_path)
    if sp is Species.BOSON and entangled and report["fidelity_ghz3"] < 1 - experiments.FIDELITY_TOL:
        click.echo(f"GHZ fidelity {report['fidelity_ghz3']!r} below threshold", err=True)
        sys.exit(EXIT_PHYSICS)


@main.command()
@common_seed
@common_out
@common_species
@click.option("--d", "d_range", default=None, help="Internal dimension(s): 3, 2..5 or 2,4.")
@click.option("--N", "N_range", default=None, help="Particle number(s): 4, 2..7 or 2,3.")
@click.option("--trials", type=click.IntRange(1), default=5, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit JSON with singular-value spectra.")
@click.option("--timings", is_flag=True, help="Fill the seconds column (output is then not reproducible).")
@_exit_codes
def table2(seed, out, species, d_range, N_range, trials, as_json, timings):
    """Jacobian ranks of the accessible-state manifolds against the reference table."""
    ds, Ns = parse_range(d_range), parse_range(N_range)
    if ds is None and Ns is None:
        cells = dimension.reference_cells(species)
    else:
        ref = dimension.reference_cells(species)
        ds = ds or sorted({c[0] for c in ref})
        Ns = Ns or sorted({c[1] for c in ref})
        sps = [Species.parse(species)] if species else list(Species)
        cells = [(d, N, sp) for sp in sps for d in ds for N in Ns]
    if any(d < 1 or N < 1 for d, N, _ in cells):
        raise ConfigError("--d and --N must be positive")
    rows = dimension.table2(cells, trials=trials, seed=seed or 0)
    text = dump_json(dimension.table_to_json(rows, timings)) if as_json else dimension.table_to_csv(rows, timings)
    _emit(text, out)
    failed = [r for r in rows if r.status in ("mismatch", "bound-violation")]
    if failed:
        for r in failed:
            click.echo(f"{r.status}: {r.species.value} d={r.d} N={r.N} rank={r.rank} reference={r.reference}", err=True)
        sys.exit(EXIT_PHYSICS)
    if any(r.status == "skipped" for r in rows):
        click.echo("some cells exceed the Jacobian size limit and were skipped", err=True)
        sys.exit(EXIT_SIZE)


@main.command("verify")
@common_seed
@common_out
@click.option("--sizes", type=click.Choice(verify.SIZES), default="small", show_default=True)
@_exit_codes
def verify_cmd(seed, out, sizes):
    """Run the cross-module property suites."""
    results = verify.run_suites(seed or 0, sizes)
    for r in results:
        click.echo(f"{'PASS' if r.passed else 'FAIL'} {r.name} ({r.checks} checks)", err=True)
    _emit(dump_json([r.to_json() for r in results]), out)
    if not all(r.passed for r in results):
        sys.exit(EXIT_PHYSICS)


if __name__ == "__main__":
    main()
