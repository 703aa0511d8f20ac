"""Task configuration and dispatch: the one entry point shared by the CLI
and the HTTP service.

A config carries the command, the inputs (file paths, builtin aliases, or
inline JSON objects), the field, the bounds, and a seed recorded for
reproducibility.  Exit codes: 0 verdict-yes, 1 mathematical negative,
2 input error, 3 bound insufficient.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field as dc_field

from .assoc import (
    DgAssocAlgebra,
    LeibnizFailure,
    NotAssociative,
    NotConilpotent,
    StasheffFailure,
    bar,
    cobar,
    cobar_completed,
    counit_bar_cobar,
    homotopy_complete_check_assoc,
    validate_algebra,
)
from .complexes import ChainComplex, NotChainMap, NotSquareZero, homology
from .fields import QQ, FieldSpec, prime_field
from .graded import GradedSpace, map_from_rule, tensor_space, zero_map
from .labels import atom, tensor as tensor_label
from .operads import (
    AxiomFailure,
    NotConilpotentOperad,
    NotReduced,
    NsCooperad,
    NsOperad,
    ass_operad,
    c0_cooperad,
    koszulness_check,
    operadic_bar,
    twisting_check,
    universal_iota,
    universal_pi,
)
from .reports import Report, digest_inputs
from .serialize import ParseError, emit_object, parse_object, parse_object_file
from . import square

COMMANDS = (
    "validate",
    "homology",
    "bar",
    "cobar",
    "cobar-complete",
    "counit-check",
    "mc-check",
    "koszul-check",
    "square-check",
    "complete-check",
    "cocomplete-check",
    "counterexample",
)


class InputError(Exception):
    pass


@dataclass
class TaskConfig:
    command: str
    inputs: list = dc_field(default_factory=list)  # paths, aliases or dicts
    field: FieldSpec = QQ
    weight_bound: int = 3
    arity_bound: int = 6
    d_max: int = 6
    witness_bound: int = 5
    degree_range: tuple | None = None
    kind: str = "pi"  # for mc-check
    seed: int = 0
    format: str = "json"
    out: str | None = None

    def bounds_dict(self):
        return {
            "weight_bound": self.weight_bound,
            "arity_bound": self.arity_bound,
            "d_max": self.d_max,
            "witness_bound": self.witness_bound,
            "degree_range": list(self.degree_range) if self.degree_range else None,
            "seed": self.seed,
            "threads": threads_cap(),
            "field": "Q" if self.field.kind == "Q" else "F%d" % self.field.characteristic,
        }


def parse_field_flag(text: str) -> FieldSpec:
    if text in ("q", "Q"):
        return QQ
    if text.startswith("fp:"):
        return prime_field(int(text.split(":", 1)[1]))
    raise InputError("field must be q or fp:<p>, got %r" % text)


def threads_cap() -> int:
    """KOSZULKIT_THREADS caps internal parallelism; evaluation is serial
    and deterministic either way, the cap is recorded for reproducibility."""
    try:
        return max(1, int(os.environ.get("KOSZULKIT_THREADS", "1")))
    except ValueError:
        return 1


# -- builtin aliases --------------------------------------------------------


def _onegen_complex(field, degree=1):
    sp = GradedSpace(field, {degree: [atom("x")]})
    return ChainComplex(sp, zero_map(sp, sp, -1))


def _x2y_algebra(field) -> DgAssocAlgebra:
    x, y = atom("x"), atom("y")
    sp = GradedSpace(field, {1: [x], 2: [y]})
    cx = ChainComplex(sp, zero_map(sp, sp, -1))
    AA = tensor_space(sp, sp)
    mu = map_from_rule(
        AA, sp, 0, lambda l, d: [(1, y)] if l == tensor_label(x, x) else []
    )
    return validate_algebra(cx, mu)


def resolve_input(spec, field, arity_bound):
    """A path, an alias ("ass", "c0", "x2y", "onegen", "v0"), or a dict."""
    if isinstance(spec, dict):
        return parse_object(spec)
    if not isinstance(spec, str):
        raise InputError("unusable input %r" % (spec,))
    name, _, arg = spec.partition(":")
    if name == "ass":
        return ass_operad(field, int(arg) if arg else arity_bound)
    if name == "c0":
        return c0_cooperad(field, int(arg) if arg else arity_bound)
    if name == "x2y":
        return _x2y_algebra(field)
    if name == "onegen":
        return _onegen_complex(field, int(arg) if arg else 1)
    if name == "v0":
        return _onegen_complex(field, 0)
    if os.path.exists(spec):
        return parse_object_file(spec)
    raise InputError("no such input file or alias: %r" % spec)


def _as_operad(obj):
    if isinstance(obj, NsOperad):
        return obj
    raise InputError("expected an operad, got %s" % type(obj).__name__)


def _as_algebra(obj):
    if isinstance(obj, DgAssocAlgebra):
        return obj
    raise InputError("expected a dg associative algebra, got %s" % type(obj).__name__)


def _operad_algebra_from(obj, P):
    """Lift a dg associative algebra (or complex) to an algebra over Ass."""
    if isinstance(obj, DgAssocAlgebra):
        A = obj
        labels = {}
        for n in P.reduced_arities():
            labels[n] = list(P.components[n].space.all_labels())

        def gamma(n, p_label, letters, _A=A, _P=P):
            if n == 1 and p_label == _P.unit_label():
                return [(1, letters[0])]
            # iterated binary product, left bracketing, for the one basis
            # operation of each arity
            vec = {letters[0]: _A.field.one()}
            for nxt in letters[1:]:
                acc = {}
                for cur, cv in vec.items():
                    for tl, tv in _A.product(cur, nxt).items():
                        s = _A.field.add(acc.get(tl, _A.field.zero()), _A.field.mul(cv, tv))
                        if s:
                            acc[tl] = s
                        else:
                            acc.pop(tl, None)
                vec = acc
            return [(v, l) for l, v in vec.items()]

        return square.OperadAlgebra(P, A.underlying, gamma, name="assoc")
    if isinstance(obj, ChainComplex):
        return square.trivial_algebra(P, obj)
    raise InputError("expected an algebra or complex, got %s" % type(obj).__name__)


# -- dispatch ---------------------------------------------------------------


_VALIDATION_ERRORS = (
    NotSquareZero,
    NotChainMap,
    AxiomFailure,
    NotReduced,
    NotConilpotentOperad,
    NotAssociative,
    LeibnizFailure,
    StasheffFailure,
    NotConilpotent,
)


def run_task(config: TaskConfig) -> Report:
    start = time.monotonic()
    report = Report(command=config.command, config=config.bounds_dict())
    try:
        _dispatch(config, report)
    except (InputError, ParseError) as exc:
        report.verdict = "input_error"
        report.exit_code = 2
        report.witnesses["error"] = str(exc)
    except _VALIDATION_ERRORS as exc:
        report.verdict = "validation_error"
        report.exit_code = 2
        report.witnesses["error"] = "%s: %s" % (type(exc).__name__, exc)
    except square.BoundTooSmall as exc:
        report.verdict = "bound_too_small"
        report.exit_code = 3
        report.witnesses["error"] = str(exc)
    report.timing_ms = (time.monotonic() - start) * 1000.0
    return report


def _verdict(report: Report, verdict: str):
    report.verdict = verdict
    if verdict in ("yes", "valid", "koszul", "commutes", "complete_in_window",
                   "isomorphism", "yes_in_window", "certified", "complete",
                   "conilpotent", "ok"):
        report.exit_code = 0
    elif verdict in ("window_insufficient", "bound_too_small", "degenerate"):
        report.exit_code = 3
    else:
        report.exit_code = 1


def _dispatch(config: TaskConfig, report: Report):
    field = config.field
    if config.command not in COMMANDS:
        raise InputError("unknown command %r" % config.command)
    inputs = [resolve_input(s, field, config.arity_bound) for s in config.inputs]
    report.input_digest = digest_inputs(
        config.command,
        [emit_object(o) for o in inputs],
        report.config,
    )

    if config.command == "validate":
        if not inputs:
            raise InputError("validate needs an input object")
        obj = inputs[0]
        report.results["kind"] = type(obj).__name__
        if isinstance(obj, (NsOperad, NsCooperad)):
            report.results["arities"] = {
                str(n): obj.components[n].dims() for n in obj.arities()
            }
        elif isinstance(obj, DgAssocAlgebra):
            report.results["dims"] = {str(k): v for k, v in obj.underlying.dims().items()}
        elif isinstance(obj, ChainComplex):
            report.results["dims"] = {str(k): v for k, v in obj.dims().items()}
        _verdict(report, "valid")
        return

    if config.command == "homology":
        obj = inputs[0]
        cx = obj if isinstance(obj, ChainComplex) else getattr(obj, "underlying", None)
        if cx is None:
            raise InputError("homology needs a complex-like input")
        rep = homology(cx, config.degree_range)
        report.results["betti"] = {str(d): b for d, b in rep.betti.items()}
        report.results["boundary_rank"] = {str(d): b for d, b in rep.boundary_rank.items()}
        _verdict(report, "ok")
        return

    if config.command == "bar":
        A = _as_algebra(inputs[0])
        coalg, wto = bar(A, config.weight_bound)
        report.results["dims"] = {str(k): v for k, v in coalg.underlying.dims().items()}
        report.windows["bar"] = wto.window()
        report.results["object"] = emit_object(coalg)
        _verdict(report, "ok")
        return

    if config.command == "cobar":
        C = inputs[0]
        from .assoc import AInfCoalgebra, NotConilpotent

        if not isinstance(C, AInfCoalgebra):
            raise InputError("cobar needs an A-infinity coalgebra")
        try:
            alg, wto = cobar(C, config.weight_bound)
        except NotConilpotent as exc:
            report.results["reason"] = str(exc)
            _verdict(report, "not_conilpotent")
            return
        report.results["dims"] = {str(k): v for k, v in alg.underlying.dims().items()}
        report.windows["cobar"] = wto.window()
        _verdict(report, "ok")
        return

    if config.command == "cobar-complete":
        C = inputs[0]
        from .assoc import AInfCoalgebra

        if not isinstance(C, AInfCoalgebra):
            raise InputError("cobar-complete needs an A-infinity coalgebra")
        wto = cobar_completed(C, config.weight_bound)
        report.results["level_dims"] = {
            str(w): {str(k): v for k, v in cx.dims().items()}
            for w, cx in wto.tower_levels.items()
        }
        report.windows["tower"] = wto.window()
        _verdict(report, "ok")
        return

    if config.command == "counit-check":
        A = _as_algebra(inputs[0])
        eps, verdict = counit_bar_cobar(A, config.weight_bound)
        report.windows["counit"] = verdict.window
        report.results["checked_range"] = verdict.checked_range
        if verdict.witness_degree is not None:
            report.witnesses["degree"] = verdict.witness_degree
        _verdict(report, verdict.verdict)
        return

    if config.command == "mc-check":
        obj = inputs[0]
        if config.kind == "pi":
            P = _as_operad(obj)
            alpha = universal_pi(P)
        elif config.kind == "iota":
            if not isinstance(obj, NsCooperad):
                raise InputError("mc-check iota needs a cooperad")
            alpha = universal_iota(obj)
        else:
            raise InputError("mc-check kind must be pi or iota")
        result = twisting_check(alpha)
        if result["witness"]:
            report.witnesses["maurer_cartan"] = result["witness"]
        _verdict(report, "yes" if result["ok"] else "no")
        return

    if config.command == "koszul-check":
        P = _as_operad(inputs[0])
        out = koszulness_check(P, min(config.d_max, P.arity_bound))
        report.results["per_arity"] = {
            str(n): {
                "bar_homology": {str(d): b for d, b in e["bar_homology"].items()},
                "bar_dims": {str(d): b for d, b in e["bar_dims"].items()},
                "concentrated": e["bar_concentrated"] and e["operad_concentrated_deg0"],
            }
            for n, e in out["per_arity"].items()
        }
        _verdict(report, "koszul" if out["koszul"] else "not_koszul")
        return

    if config.command == "square-check":
        P = _as_operad(inputs[0]) if inputs else ass_operad(field, config.arity_bound)
        barP = operadic_bar(P)
        if len(inputs) > 1:
            D, _ = square.bar_pi(_operad_algebra_from(inputs[1], P), config.weight_bound, barP=barP)
        else:
            V = _onegen_complex(field)
            D = square.CooperadCoalgebra(
                barP, V, lambda l: [], letter_weight={atom("x"): 1}, name="one-gen"
            )
        out = square.square_commutes_check(
            P, D, (config.weight_bound, config.arity_bound), barP=barP
        )
        report.results["levels"] = {
            str(k): {kk: vv for kk, vv in e.items() if kk != "dims"}
            for k, e in out["levels"].items()
        }
        report.results["isomorphism"] = out["isomorphism"]
        if out["witness"]:
            report.witnesses["mismatch"] = out["witness"]
        _verdict(report, "commutes" if out["commutes"] else "no")
        return

    if config.command == "complete-check":
        rng = config.degree_range or (0, config.weight_bound)
        if inputs and isinstance(inputs[0], DgAssocAlgebra):
            # associative route: compare the cobar of the bar with its
            # completion directly
            out = homotopy_complete_check_assoc(inputs[0], config.weight_bound, rng)
            report.results.update({k: v for k, v in out.items() if k != "verdict"})
            _verdict(report, out["verdict"])
            return
        if inputs and isinstance(inputs[0], NsOperad):
            P = inputs[0]
            target = inputs[1] if len(inputs) > 1 else _onegen_complex(field)
        else:
            P = ass_operad(field, config.arity_bound)
            target = inputs[0] if inputs else _onegen_complex(field)
        if isinstance(target, ChainComplex):
            A = square.trivial_algebra(P, target)
        else:
            A = _operad_algebra_from(target, P)
        out = square.homotopy_complete_check(
            A, (config.weight_bound, config.arity_bound), rng
        )
        report.results.update({k: v for k, v in out.items() if k != "verdict"})
        _verdict(report, out["verdict"])
        return

    if config.command == "cocomplete-check":
        P = _as_operad(inputs[0]) if inputs else ass_operad(field, config.arity_bound)
        V = inputs[1] if len(inputs) > 1 else _onegen_complex(field)
        if not isinstance(V, ChainComplex):
            raise InputError("cocomplete-check takes a complex of generators")
        out = square.good_cocompletion_check(
            P, V, (config.weight_bound, config.arity_bound)
        )
        report.results.update({k: v for k, v in out.items() if k not in ("verdict",)})
        if "witness" in out:
            report.witnesses["mismatch"] = out["witness"]
        _verdict(report, out["verdict"])
        return

    if config.command == "counterexample":
        N = config.witness_bound
        C = c0_cooperad(field, max(config.arity_bound, N))
        V = inputs[0] if inputs else _onegen_complex(field, 0)
        if not isinstance(V, ChainComplex):
            raise InputError("counterexample takes a complex of generators")
        out = square.counterexample_witness(C, V, N)
        report.results["facts"] = {
            str(k): {kk: str(vv) if not isinstance(vv, (bool, int)) else vv
                     for kk, vv in e.items() if kk != "component_dims"}
            for k, e in out["facts"].items()
        }
        report.results["inference"] = out["inference"]
        _verdict(report, out["verdict"])
        return

    raise InputError("unhandled command %r" % config.command)
