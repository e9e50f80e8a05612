"""
Command-line interface.

Exit codes: 0 success, 1 validation failure or domain refusal, 2 unreadable
or malformed input (including bad command-line usage).

Tolerances come from a named profile (``--profile`` or the
``HISTLAB_TOLERANCE_PROFILE`` environment variable) and may be overridden
field by field with ``--tolerance-norm``, ``--tolerance-herm``,
``--tolerance-proj``, ``--tolerance-rec`` and ``--tolerance-dec``.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
import sys
from dataclasses import replace

import click

from histlab import measures, models
from histlab.errors import HistlabError, ModelFileError, WrongKind
from histlab.hilbert import DEFAULT_TOLERANCE, ToleranceConfig
from histlab.modelfile import dumps_model, load_model

PROFILE_ENV = "HISTLAB_TOLERANCE_PROFILE"
PROFILES = {
    "default": DEFAULT_TOLERANCE,
    "strict": ToleranceConfig(1e-14, 1e-14, 1e-12, 1e-10, 1e-10),
    "loose": ToleranceConfig(1e-9, 1e-9, 1e-7, 1e-6, 1e-6),
}
_TOL_FIELDS = ("norm", "herm", "proj", "rec", "dec")


# -- plumbing -----------------------------------------------------------------


class _Abort(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _describe(exc: HistlabError) -> str:
    msg = f"{type(exc).__name__}: {exc}"
    loc = getattr(exc, "location", None)
    if loc is not None:
        msg += f" [at {loc}]"
    violations = getattr(exc, "violations", ())
    if len(violations) > 1:
        msg += f" [violations: {', '.join(violations)}]"
    return msg


def _guarded(fn):
    """Map library exceptions onto the exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ModelFileError as exc:
            click.echo(f"error: {_describe(exc)}", err=True)
            sys.exit(2)
        except HistlabError as exc:
            click.echo(f"error: {_describe(exc)}", err=True)
            sys.exit(1)
        except _Abort as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.code)

    return wrapper


def _tolerance(profile: str, overrides: dict) -> ToleranceConfig:
    try:
        tol = PROFILES[profile]
    except KeyError:
        raise _Abort(2, f"unknown tolerance profile {profile!r}; choose from {sorted(PROFILES)}") from None
    changes = {f"eps_{k}": v for k, v in overrides.items() if v is not None}
    return replace(tol, **changes)


def _tolerance_options(fn):
    for name in reversed(_TOL_FIELDS):
        fn = click.option(f"--tolerance-{name}", f"tol_{name}", type=float, default=None,
                          help=f"Override eps_{name}.")(fn)
    fn = click.option("--profile", envvar=PROFILE_ENV, default="default", show_default=True,
                      help=f"Tolerance profile ({', '.join(PROFILES)}); also read from ${PROFILE_ENV}.")(fn)
    return fn


def _pop_tolerance(kwargs) -> ToleranceConfig:
    overrides = {k: kwargs.pop(f"tol_{k}") for k in _TOL_FIELDS}
    return _tolerance(kwargs.pop("profile"), overrides)


def _out_option(fn):
    return click.option("--out", "out", type=click.Path(dir_okay=False), default=None,
                        help="Write output to this file instead of standard output.")(fn)


def _emit(text: str, out) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _Abort(2, f"cannot write {out}: {exc}") from exc


def _key(k) -> str:
    if isinstance(k, tuple) and k and k[0] == "residual":
        return f"residual:{k[1]}"
    return ":".join(str(i) for i in k)


def _num(x: float):
    # JSON has no infinities; keep them as strings
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def _witness(w) -> dict | None:
    if w is None:
        return None
    return {"row": _key(w.row), "col": _key(w.col), "magnitude": _num(w.magnitude)}


# -- reports ------------------------------------------------------------------


def _classify_report(bundle, tol: ToleranceConfig) -> dict:
    hset = bundle.set
    c = measures.classify(bundle.state, hset, bundle.records, tol)
    ep = c.extended
    worst_key, worst_value = ep.worst()
    report = {
        "model": bundle.name,
        "dim": hset.dim,
        "shape": list(hset.shape),
        "tolerance": {f"eps_{k}": v for k, v in zip(_TOL_FIELDS, tol.as_tuple())},
        "records_source": c.records_source,
        "flags": c.flags,
        "witnesses": {k: _witness(w) for k, w in c.witnesses.items()},
        "extended_probability_worst": {"index": _key(worst_key), "label": hset.label(worst_key), "value": worst_value},
        "normalization": {"extended_probability_sum_minus_1": ep.total - 1.0},
        "completeness_residual": hset.completeness_residual(),
    }
    if bundle.records is not None:
        corr = measures.correlation_matrix(bundle.state, hset, bundle.records)
        report["normalization"]["correlation_sum_minus_1"] = corr.normalization - 1.0
    return report


def _flag_text(v) -> str:
    return "n/a" if v is None else str(bool(v)).lower()


def _render_classify(r: dict) -> str:
    lines = [
        f"model: {r['model']}",
        f"dim: {r['dim']}  shape: {'x'.join(map(str, r['shape']))}",
        "tolerance: " + " ".join(f"{k}={v!r}" for k, v in r["tolerance"].items()),
        f"records: {r['records_source'] or 'none'}",
    ]
    for name, value in r["flags"].items():
        line = f"{name}: {_flag_text(value)}"
        w = r["witnesses"].get(name)
        if w is not None and name != "ep_in_range":
            line += f"  (worst {w['row']} / {w['col']}: {w['magnitude']!r})"
        lines.append(line)
    w = r["extended_probability_worst"]
    lines.append(f"extended probability worst: {w['value']!r} at {w['index']} ({w['label']})")
    for k, v in r["normalization"].items():
        lines.append(f"{k}: {v!r}")
    lines.append(f"completeness_residual: {r['completeness_residual']!r}")
    return "\n".join(lines) + "\n"


def _split_conditional(hset, spec: str) -> tuple[int, int]:
    if ":" not in spec:
        raise click.BadParameter("expected FAMILY:VALUE", param_hint="--conditional-on")
    fam_name, value = spec.rsplit(":", 1)
    names = [s.name for s in hset.schedule]
    if fam_name in names:
        slot = names.index(fam_name)
    else:
        try:
            slot = int(fam_name)
            hset.schedule[slot]
        except (ValueError, IndexError):
            raise click.BadParameter(f"no slot named {fam_name!r}; slots are {names}",
                                     param_hint="--conditional-on") from None
    try:
        member = hset.schedule[slot].family.index_of(value)
    except KeyError as exc:
        raise click.BadParameter(str(exc.args[0]), param_hint="--conditional-on") from None
    return slot % len(hset.schedule), member


def _probs_report(bundle, tol: ToleranceConfig, conditional: str | None) -> dict:
    hset = bundle.set
    if conditional is None:
        table = measures.history_probabilities(bundle.state, hset, bundle.records, tol)
        rows = [{"index": _key(a), "label": hset.label(a), "p": table[a]} for a in hset.indices]
        return {"model": bundle.name, "kind": "joint", "probabilities": rows, "total": table.total}
    slot, member = _split_conditional(hset, conditional)
    table = measures.retrodict(bundle.state, hset, member, slot, bundle.records, tol)
    rest = [s for k, s in enumerate(hset.schedule) if k != slot]
    rows = []
    for past in sorted(table.values):
        label = ",".join(s.family.labels[i] for s, i in zip(rest, past))
        rows.append({"index": _key(past), "label": label, "p": table[past]})
    given = f"{hset.schedule[slot].name or slot}:{hset.schedule[slot].family.labels[member]}"
    return {"model": bundle.name, "kind": "conditional", "given": given, "probabilities": rows, "total": table.total}


def _render_probs(r: dict) -> str:
    head = f"model: {r['model']}\n"
    if r["kind"] == "conditional":
        head += f"conditional on {r['given']}\n"
    lines = [f"{row['index']}\t{row['label']}\t{row['p']!r}" for row in r["probabilities"]]
    return head + "\n".join(lines) + f"\ntotal: {r['total']!r}\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _format_option(fn):
    return click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text",
                        show_default=True, help="Report format.")(fn)


def _render(report: dict, fmt: str, text_renderer) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    return text_renderer(report)


# -- commands -----------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="histlab")
def cli():
    """Build, check and measure sets of histories of finite closed quantum systems."""


_model_path = click.argument("path", type=click.Path(dir_okay=False))


@cli.command()
@_model_path
@_tolerance_options
@_format_option
@_out_option
@_guarded
def validate(path, fmt, out, **kw):
    """Check every invariant of a model file."""
    tol = _pop_tolerance(kw)
    b = load_model(path, tol)
    report = {
        "model": b.name,
        "valid": True,
        "dim": b.set.dim,
        "shape": list(b.set.shape),
        "histories": len(b.set),
        "records": b.records is not None,
        "completeness_residual": b.set.completeness_residual(),
    }

    def text(r):
        return (
            f"ok: {r['model']}  dim {r['dim']}  shape {'x'.join(map(str, r['shape']))}"
            f"  records {'yes' if r['records'] else 'no'}  completeness residual {r['completeness_residual']!r}\n"
        )

    _emit(_render(report, fmt, text), out)


@cli.command()
@_model_path
@click.option("--epsilon", type=float, default=None, help="Threshold for both recording and decoherence.")
@_tolerance_options
@_format_option
@_out_option
@_guarded
def classify(path, epsilon, fmt, out, **kw):
    """Place the model in the hierarchy strong records, recorded, decoherent, in range."""
    tol = _pop_tolerance(kw)
    if epsilon is not None:
        tol = tol.with_epsilon(epsilon)
    b = load_model(path, tol)
    _emit(_render(_classify_report(b, tol), fmt, _render_classify), out)


@cli.command()
@_model_path
@click.option("--conditional-on", "conditional", default=None, metavar="FAMILY:VALUE",
              help="Condition on a slot's alternative (slot name or number, member label or number).")
@_tolerance_options
@_format_option
@_out_option
@_guarded
def probs(path, conditional, fmt, out, **kw):
    """Probabilities of a recorded set, joint or conditional on a present datum."""
    tol = _pop_tolerance(kw)
    b = load_model(path, tol)
    _emit(_render(_probs_report(b, tol, conditional), fmt, _render_probs), out)


@cli.command()
@_model_path
@click.option("--kind", type=click.Choice(["dfunc", "corr", "ep"]), required=True,
              help="dfunc: decoherence functional, corr: record correlations, ep: extended probabilities.")
@_tolerance_options
@_out_option
@_guarded
def matrix(path, kind, out, **kw):
    """Emit a measure as CSV, rows in lexicographic index order."""
    tol = _pop_tolerance(kw)
    b = load_model(path, tol)
    if kind == "ep":
        ep = measures.extended_probabilities(b.state, b.set, tol)
        text = _csv(["alpha", "value"], [[_key(a), repr(ep[a])] for a in b.set.indices])
    else:
        if kind == "dfunc":
            m = measures.decoherence_matrix(b.state, b.set)
            values = m.entries
        else:
            if b.records is None:
                raise _Abort(1, "NotRecorded: the model has no records, so there is no correlation matrix")
            m = measures.correlation_matrix(b.state, b.set, b.records)
            values = m.raw
        rows = []
        for i, r in enumerate(m.row_keys):
            for j, c in enumerate(m.col_keys):
                z = complex(values[i, j])
                rows.append([_key(r), _key(c), repr(z.real), repr(z.imag)])
        text = _csv(["alpha", "beta", "re", "im"], rows)
    _emit(text, out)


@cli.command()
@_model_path
@click.option("--summary", is_flag=True, help="Also print visibility and fringe ratio to standard error.")
@_tolerance_options
@_out_option
@_guarded
def pattern(path, summary, out, **kw):
    """Screen pattern of a two-slit model as CSV: bin, intensity, ep_upper, ep_lower."""
    tol = _pop_tolerance(kw)
    b = load_model(path, tol)
    if len(b.set.shape) != 2 or b.set.shape[0] < 2:
        raise WrongKind(f"need a two-time set with at least two slit alternatives, got shape {b.set.shape}")
    pat = models.screen_pattern(b.state, b.set)
    rows = [
        [j, repr(float(pat["intensity"][j])), repr(float(pat["ep_upper"][j])), repr(float(pat["ep_lower"][j]))]
        for j in range(b.set.shape[1])
    ]
    _emit(_csv(["bin", "intensity", "ep_upper", "ep_lower"], rows), out)
    if summary:
        click.echo(f"visibility {pat['visibility']!r}  fringe_ratio {pat['fringe_ratio']!r}", err=True)


# -- built-in models ------------------------------------------------------------


@cli.group()
def builtin():
    """Write a built-in model as a model file."""


def _builtin_command(name: str):
    def decorate(fn):
        @builtin.command(name)
        @click.option("--emit", type=click.Path(dir_okay=False), default=None,
                      help="Model file to write (default: standard output).")
        @click.option("--verify", "check", is_flag=True,
                      help="Recompute the model's documented expectations; exit 1 if any fails.")
        @functools.wraps(fn)
        @_guarded
        def command(emit, check, **kw):
            bundle = fn(**kw)
            if check:
                failed = 0
                for r in models.verify(bundle):
                    e = r.expectation
                    ok = "pass" if r.passed else "FAIL"
                    failed += not r.passed
                    click.echo(f"{ok}  {e.quantity} {e.params or ''} {e.relation} {e.expected!r}: got {r.value!r}",
                               err=True)
                if failed:
                    raise _Abort(1, f"{failed} expectation(s) failed")
            _emit(dumps_model(bundle), emit)

        return command

    return decorate


_VARIANTS = {"A": "A_set", "B": "B_set", "fine": "fine_AB", "A_set": "A_set", "B_set": "B_set", "fine_AB": "fine_AB"}


@_builtin_command("three-box")
@click.option("--variant", type=click.Choice(list(_VARIANTS)), default="A", show_default=True)
def _three_box(variant):
    """Three boxes with the present datum Phi."""
    return models.three_box(_VARIANTS[variant])


@_builtin_command("two-slit")
@click.option("--bins", type=int, default=models.TWO_SLIT_DEFAULTS["bins"], show_default=True)
@click.option("--slit-u", type=int, default=None, help="Upper slit bin (default 3/8 of bins).")
@click.option("--slit-l", type=int, default=None, help="Lower slit bin (default 5/8 of bins).")
@click.option("--width", type=float, default=models.TWO_SLIT_DEFAULTS["packet_width"], show_default=True)
@click.option("--time", "propagation_time", type=float, default=models.TWO_SLIT_DEFAULTS["propagation_time"],
              show_default=True)
@click.option("--record/--no-record", default=False, show_default=True, help="Add the which-path qubit and records.")
def _two_slit(bins, slit_u, slit_l, width, propagation_time, record):
    """Two slits, free propagation to a screen of position bins."""
    return models.two_slit(bins, slit_u, slit_l, width, record, propagation_time)


@_builtin_command("qubit-trine")
def _qubit_trine():
    """One qubit, two non-commuting times, an extended probability of -1/8."""
    return models.qubit_trine()


@_builtin_command("spin-env")
@click.option("--n", "n_env", type=int, default=4, show_default=True, help="Environment qubits.")
@click.option("--theta", type=float, default=math.pi / 2, show_default=True, help="Conditional rotation angle.")
def _spin_env(n_env, theta):
    """System qubit imprinting its z value on N environment qubits."""
    return models.spin_environment(n_env, theta)


@_builtin_command("imaginary-overlap")
@click.option("--c", type=float, default=0.1, show_default=True, help="Branch-overlap magnitude.")
def _imaginary_overlap(c):
    """Recorded but not decoherent."""
    return models.imaginary_overlap(c)


def main(argv=None):
    cli.main(args=argv, prog_name="histlab")


if __name__ == "__main__":
    main()
