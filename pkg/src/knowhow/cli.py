"""Command-line front end.

Subcommands: ``check`` (decide satisfiability, exit 10/20), ``flatten``
(show the leaf normal form), ``modelcheck`` (evaluate a formula on a model
file), ``gen`` (seeded random formulas and models), ``bench`` (timing and
agreement table).  Usage and parse errors exit 1; reports print as plain
text or as a single JSON document.
"""

from __future__ import annotations

import json
import os
import sys
import time
from dataclasses import dataclass

import click

from .certificate import CapacityError, Certificate
from .formula import Formula, Kh, Not, Or, ParseError, desugar, parse, render
from .khsat import Result, Verdict, decide, oracle_call_count
from .normalform import FlattenResult, flatten
from .oracle import SearchBounds, bounded_sat_search, random_formula, random_lts
from .propsat import SatOracle
from .semantics import Lts, dump_model, eval_formula, has_witness_plan, load_model

SOLVER_ENV_VAR = "KNOWHOW_SAT_SOLVER"

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_ERROR = 1


@dataclass(frozen=True)
class RunConfig:
    """One invocation's settings: decide mode, solver backend, search knobs."""

    mode: str
    solver_path: str | None
    bounds: SearchBounds
    output_format: str
    trace: bool


def _resolve_solver(flag_value: str | None) -> str | None:
    path = flag_value or os.environ.get(SOLVER_ENV_VAR) or None
    if path is not None and not os.path.exists(path):
        raise click.UsageError(f"external solver not found: {path}")
    return path


def _read_formula(formula: str | None, file: str | None) -> Formula:
    if (formula is None) == (file is None):
        raise click.UsageError("provide a formula either inline or via --file")
    if file is not None:
        with open(file, encoding="utf-8") as handle:
            lines = [ln for ln in handle if not ln.lstrip().startswith("#")]
        text = " ".join(ln.strip() for ln in lines if ln.strip())
    else:
        text = formula
    return parse(text)


def _top_level_kh(f: Formula) -> list[Kh]:
    """Maximal Kh subformulas of the desugared formula, first-seen order."""
    found: list[Kh] = []

    def walk(g: Formula) -> None:
        if isinstance(g, Kh):
            if g not in found:
                found.append(g)
        elif isinstance(g, Not):
            walk(g.f)
        elif isinstance(g, Or):
            walk(g.left)
            walk(g.right)

    walk(desugar(f))
    return found


def _mask_states(m: Lts, mask: int) -> list[str]:
    return [s for i, s in enumerate(m.states) if mask >> i & 1]


def _echo_report(pairs: list[tuple[str, object]], fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(dict(pairs), indent=2))
    else:
        for key, value in pairs:
            click.echo(f"{key}: {value}")


def _partition_text(verdict: Verdict) -> str:
    if verdict.partition is None:
        return "-"
    items = sorted(verdict.partition.k_assignment.items())
    if not items:
        return "(empty)"
    return " ".join(f"{k}={'true' if v else 'false'}" for k, v in items)


def _certificate_summary(certificate: Certificate | None) -> str:
    if certificate is None:
        return "-"
    actions = " ".join(certificate.active_actions) or "(none)"
    return f"{len(certificate.model.states)} states, actions {actions}"


def _oracle_check(f: Formula, verdict_result: Result, bounds: SearchBounds) -> str:
    model = bounded_sat_search(f, bounds)
    if model is None:
        return "no-model-found"
    return "model-found-agrees" if verdict_result is Result.SAT else "model-found-disagrees"


@click.group()
def cli() -> None:
    """Satisfiability toolkit for a logic of knowing how."""


@cli.command()
@click.argument("formula", required=False)
@click.option("--file", "-f", "file", type=click.Path(exists=True), help="Read the formula from a file (# lines are comments).")
@click.option("--mode", type=click.Choice(["plain", "augmented", "differential"]), default="plain", show_default=True)
@click.option("--solver", help=f"External solver executable (default: ${SOLVER_ENV_VAR}).")
@click.option("--max-states", type=int, default=3, show_default=True, help="Bounded-search state cap for the differential cross-check.")
@click.option("--trials", type=int, default=200, show_default=True, help="Random trials for the differential cross-check.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--trace", is_flag=True, help="Record per-guess oracle-call counts.")
@click.option("--certificate-out", type=click.Path(), help="Write the SAT certificate to this file.")
def check(formula, file, mode, solver, max_states, trials, seed, fmt, trace, certificate_out):
    """Decide satisfiability; exit 10 on SAT, 20 on UNSAT."""
    cfg = RunConfig(
        mode=mode,
        solver_path=_resolve_solver(solver),
        bounds=SearchBounds(max_states=max_states, random_trials=trials, seed=seed),
        output_format=fmt,
        trace=trace,
    )
    f = _read_formula(formula, file)
    want_trace = cfg.trace or cfg.mode == "differential"

    oracle = SatOracle(solver_path=cfg.solver_path)
    primary = decide(f, "plain" if cfg.mode == "differential" else cfg.mode,
                     oracle=oracle, trace=want_trace)
    certificate = primary.certificate

    pairs: list[tuple[str, object]] = [
        ("result", primary.result.value),
        ("mode", cfg.mode),
        ("guesses_tried", primary.guesses_tried),
    ]
    if cfg.output_format == "json":
        partition = dict(primary.partition.k_assignment) if primary.partition else None
        cert_doc = json.loads(certificate.dump()) if certificate else None
        pairs += [
            ("partition", partition),
            ("certificate", cert_doc),
            ("witness_state", certificate.witness_state if certificate else None),
        ]
    else:
        pairs += [
            ("partition", _partition_text(primary)),
            ("certificate", _certificate_summary(certificate)),
            ("witness_state", certificate.witness_state if certificate else "-"),
        ]
    calls: dict[str, object] = {
        "enumeration": primary.enumeration_calls,
        "certificate": primary.certificate_calls,
        "per_guess_max": oracle_call_count(primary) if want_trace else None,
        "total": oracle.calls,
    }
    pairs.append(("oracle_calls", calls if cfg.output_format == "json" else
                  " ".join(f"{k}={v}" for k, v in calls.items() if v is not None)))

    if cfg.mode == "differential":
        other_oracle = SatOracle(solver_path=cfg.solver_path)
        other = decide(f, "augmented", oracle=other_oracle, trace=True)
        pairs += [
            ("augmented_result", other.result.value),
            ("modes_agree", primary.result is other.result),
            ("oracle_check", _oracle_check(f, primary.result, cfg.bounds)),
        ]

    _echo_report(pairs, cfg.output_format)
    if certificate_out and certificate is not None:
        with open(certificate_out, "w", encoding="utf-8") as handle:
            handle.write(certificate.dump())
    return EXIT_SAT if primary.result is Result.SAT else EXIT_UNSAT


@cli.command("flatten")
@click.argument("formula", required=False)
@click.option("--file", "-f", "file", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
def flatten_cmd(formula, file, fmt):
    """Print the leaf normal form: skeleton plus fresh-atom definitions."""
    result: FlattenResult = flatten(_read_formula(formula, file))
    if fmt == "json":
        doc = {
            "skeleton": render(result.phi0),
            "definitions": [
                {"atom": k.name, "leaf": render(leaf)} for k, leaf in result.defs
            ],
        }
        click.echo(json.dumps(doc, indent=2))
        return 0
    click.echo(f"skeleton: {render(result.phi0)}")
    for k, leaf in result.defs:
        click.echo(f"  {k.name} := {render(leaf)}")
    return 0


@cli.command()
@click.argument("model_file", type=click.Path(exists=True))
@click.argument("formula")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
def modelcheck(model_file, formula, fmt):
    """Evaluate a formula on a model; show witnesses for each Kh conjunct."""
    with open(model_file, encoding="utf-8") as handle:
        model = load_model(handle.read())
    f = parse(formula)
    truth = eval_formula(model, f)
    witnesses: list[tuple[str, str | None]] = []
    for kh in _top_level_kh(f):
        plan = has_witness_plan(
            model, eval_formula(model, kh.pre), eval_formula(model, kh.post)
        )
        witnesses.append((render(kh), None if plan is None else " ".join(plan) or "ε"))
    if fmt == "json":
        doc = {
            "truth_set": _mask_states(model, truth),
            "witnesses": [{"formula": text, "witness": w} for text, w in witnesses],
        }
        click.echo(json.dumps(doc, indent=2))
        return 0
    names = _mask_states(model, truth)
    click.echo(f"truth set: {' '.join(names) if names else '(empty)'}")
    for text, witness in witnesses:
        click.echo(f"{text}: {'none' if witness is None else 'witness ' + witness}")
    return 0


@cli.group()
def gen() -> None:
    """Seeded random instances in the standard text formats."""


@gen.command("formula")
@click.option("--depth", type=int, default=2, show_default=True)
@click.option("--leaves", type=int, default=3, show_default=True)
@click.option("--atoms", default="p,q", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=1, show_default=True)
def gen_formula(depth, leaves, atoms, seed, count):
    """Print seeded random formulas, one per line, seeds in comments."""
    names = tuple(a.strip() for a in atoms.split(",") if a.strip())
    for i in range(count):
        click.echo(f"# seed={seed + i} depth<={depth} leaves<={leaves}")
        click.echo(render(random_formula(depth, leaves, names, seed + i)))
    return 0


@gen.command("model")
@click.option("--states", type=int, default=3, show_default=True)
@click.option("--actions", type=int, default=2, show_default=True)
@click.option("--atoms", default="p,q", show_default=True)
@click.option("--density", type=float, default=0.3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def gen_model(states, actions, atoms, density, seed):
    """Print one seeded random model document (seed recorded inside)."""
    names = tuple(a.strip() for a in atoms.split(",") if a.strip())
    model = random_lts(states, actions, names, density, seed)
    click.echo(dump_model(model, extra={"seed": seed}))
    return 0


@cli.command()
@click.option("--count", type=int, default=20, show_default=True)
@click.option("--depth", type=int, default=2, show_default=True)
@click.option("--leaves", type=int, default=3, show_default=True)
@click.option("--atoms", default="p,q", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(["plain", "augmented", "differential"]), default="plain", show_default=True)
@click.option("--solver", help=f"External solver executable (default: ${SOLVER_ENV_VAR}).")
@click.option("--trials", type=int, default=0, show_default=True, help="Random trials for the oracle cross-check (0 = exhaustive box only).")
@click.option("--formula", "extra_formulas", multiple=True, help="Pinned instance prepended to the generated suite (repeatable).")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
def bench(count, depth, leaves, atoms, seed, mode, solver, trials, extra_formulas, fmt):
    """Run a seeded suite; report time, calls, verdicts, agreement."""
    cfg = RunConfig(
        mode=mode,
        solver_path=_resolve_solver(solver),
        bounds=SearchBounds(random_trials=trials, seed=seed),
        output_format=fmt,
        trace=True,
    )
    names = tuple(a.strip() for a in atoms.split(",") if a.strip())
    instances: list[tuple[str, Formula]] = [
        ("pinned", parse(text)) for text in extra_formulas
    ]
    instances += [
        (str(seed + i), random_formula(depth, leaves, names, seed + i))
        for i in range(count)
    ]

    rows: list[dict[str, object]] = []
    for label, f in instances:
        oracle = SatOracle(solver_path=cfg.solver_path)
        started = time.perf_counter()
        verdict = decide(f, "plain" if cfg.mode == "differential" else cfg.mode,
                         oracle=oracle, trace=True)
        elapsed_ms = (time.perf_counter() - started) * 1000
        row: dict[str, object] = {
            "seed": label,
            "verdict": verdict.result.value,
            "guesses": verdict.guesses_tried,
            "per_guess_max": oracle_call_count(verdict),
            "total_calls": oracle.calls,
            "ms": round(elapsed_ms, 2),
            "formula": render(f),
        }
        if cfg.mode == "differential":
            other = decide(f, "augmented", oracle=SatOracle(solver_path=cfg.solver_path))
            row["modes_agree"] = verdict.result is other.result
            row["oracle_check"] = _oracle_check(f, verdict.result, cfg.bounds)
        rows.append(row)

    if cfg.output_format == "json":
        click.echo(json.dumps(rows, indent=2))
        return 0
    keys = list(rows[0]) if rows else []
    keys.remove("formula")
    widths = {k: max(len(k), *(len(str(r[k])) for r in rows)) for k in keys}
    click.echo("  ".join(k.ljust(widths[k]) for k in keys) + "  formula")
    for row in rows:
        lead = "  ".join(str(row[k]).ljust(widths[k]) for k in keys)
        click.echo(f"{lead}  {row['formula']}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Entry point with solver-style exit codes (10 SAT / 20 UNSAT / 1 error)."""
    try:
        code = cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:        # --help and friends
        return exc.exit_code
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_ERROR
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        return EXIT_ERROR
    except (CapacityError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return code if isinstance(code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
