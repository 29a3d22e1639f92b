"""Command-line front end.

Exit codes: 0 success, 1 verification or candidate failure, 2 usage or
environment error.  Standard output carries only the command's product
(serialized rows, a diff report, an evaluation); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from qfano.contractions import ClassCoefficients
from qfano.core import BirationalRun, FlipDatum, as_q, q_str
from qfano.enumerator import (
    POINT_TAGS,
    SEARCH_FAMILIES,
    TAG_C_F20,
    TAG_C_P2,
    TAG_CREPANT,
    TAG_D,
    TAG_E1,
    TAG_E1_ZU1,
    Bounds,
    Scenario,
    boundary_audit,
    candidate_problems,
    enumerate_solutions,
    main_theorem_rows,
    regroup_by_h,
)
from qfano.riemann_roch import MAX_AXIAL_WEIGHT, h0_antik, k_c2
from qfano.tables import (
    FORMATS,
    FixtureError,
    default_fixture_dir,
    diff_all,
    existence_lookup,
    load_fixtures,
    markdown_by_h,
    serialize,
)

log = logging.getLogger("qfano")
FIXTURE_ENV = "QFANO_FIXTURE_DIR"
OUTPUT_TAGS = (TAG_E1, TAG_E1_ZU1) + POINT_TAGS + ("E5/E11", TAG_C_P2, TAG_C_F20, TAG_D, TAG_CREPANT)


def rational(text: str) -> Fraction:
    try:
        return as_q(text)
    except (TypeError, ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"malformed rational {text!r}; use p/q or an integer") from None


def non_negative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def positive(text: str) -> int:
    value = non_negative(text)
    if value == 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def flip_list(text: str) -> tuple[FlipDatum, ...]:
    """``a:aw`` (index-2 flip, d = aw/2) or ``a:d:aw`` items separated by commas."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        parts = item.split(":")
        try:
            if len(parts) == 2:
                out.append(FlipDatum.index2(as_q(parts[0]), int(parts[1])))
            elif len(parts) == 3:
                out.append(FlipDatum(as_q(parts[0]), as_q(parts[1]), int(parts[2])))
            else:
                raise ValueError
        except (TypeError, ValueError, ZeroDivisionError):
            raise argparse.ArgumentTypeError(f"malformed flip {item!r}; use a:aw or a:d:aw") from None
    return tuple(out)


def case_tag(text: str) -> str:
    lowered = {t.lower(): t for t in OUTPUT_TAGS}
    lowered.update({"crepant": TAG_CREPANT, "point": "point", "c": "C", "e3": "E3/E4", "e4": "E3/E4",
                    "e5": "E5", "e11": "E11"})
    tag = lowered.get(text.lower())
    if tag is None:
        raise argparse.ArgumentTypeError(f"unknown case {text!r}")
    return tag


# --- parser ----------------------------------------------------------------


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    d = Bounds()
    g = p.add_argument_group("search bounds")
    g.add_argument("--z-max", type=positive, default=d.z_max)
    g.add_argument("--u-max", type=positive, default=d.u_max)
    g.add_argument("--k-max", type=positive, default=d.k_max)
    g.add_argument("--e-max", type=non_negative, default=d.e_max)
    g.add_argument("--n-max", type=non_negative, default=d.n_max)
    g.add_argument("--max-flips", type=positive, default=d.max_flips)
    g.add_argument("--a-max", type=positive, default=d.a_max)
    g.add_argument("--d-step", type=rational, default=d.d_step)
    p.add_argument("--q", type=positive, default=1, help="denominator allowed for z")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfano", description="Exact search for the numerical solutions of the index-2 blow-up equations.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="run the search and print the solution rows")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--case", type=case_tag, action="append", help="keep only rows with this case tag (repeatable)")
    p.add_argument("--main", action="store_true", help="apply the final exclusions and group markdown output by h")
    p.add_argument("--workers", type=positive, default=None)
    p.add_argument("--output", type=Path, default=None)
    _add_scenario_flags(p)

    p = sub.add_parser("verify", help="diff the default search against the fixture tables")
    p.add_argument("--fixture-dir", type=Path, default=None)
    p.add_argument("--workers", type=positive, default=None)

    p = sub.add_parser("oracle", help="run the unpruned oracle and compare it with the search")
    p.add_argument("--format", choices=FORMATS, default="json")
    p.add_argument("--output", type=Path, default=None)
    _add_scenario_flags(p)

    p = sub.add_parser("eval", help="evaluate one candidate")
    p.add_argument("--case", type=case_tag, required=True)
    p.add_argument("--type", type=case_tag, default=None, help="point contraction type when --case point")
    p.add_argument("--base", choices=("P2", "F20"), default=None, help="conic bundle base when --case C")
    p.add_argument("--kx3", type=rational, required=True)
    p.add_argument("--e", type=rational, default=Fraction(0))
    p.add_argument("--flips", type=flip_list, default=())
    p.add_argument("--z", type=rational, required=True)
    p.add_argument("--u", type=rational, required=True)

    p = sub.add_parser("rr", help="h^0(-K) and -K.c2 from (-K)^3 and N")
    p.add_argument("--kx3", type=rational, required=True)
    p.add_argument("--n", type=non_negative, required=True)
    return parser


def scenario_from(args: argparse.Namespace) -> Scenario:
    bounds = Bounds(
        z_max=args.z_max,
        u_max=args.u_max,
        k_max=args.k_max,
        e_max=args.e_max,
        n_max=args.n_max,
        max_flips=args.max_flips,
        d_step=args.d_step,
        a_max=args.a_max,
    )
    return Scenario(q=args.q, bounds=bounds)


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        output.write_text(text, encoding="utf-8")


# --- commands --------------------------------------------------------------


def _fixture_dir(args: argparse.Namespace) -> Path:
    if args.fixture_dir is not None:
        return args.fixture_dir
    env = os.environ.get(FIXTURE_ENV)
    return Path(env) if env else default_fixture_dir()


def cmd_enumerate(args: argparse.Namespace) -> int:
    sc = scenario_from(args)
    rows = enumerate_solutions(sc, args.workers)
    for line in boundary_audit(rows, sc.bounds):
        log.warning("bound reached: %s", line)
    if args.main:
        rows = main_theorem_rows(rows, sc)
    if args.case:
        rows = [r for r in rows if r.case in args.case or any(c in r.case.split("/") for c in args.case)]
    log.info("%d rows", len(rows))
    if args.main and args.format == "markdown":
        try:
            by_h = next(t for t in load_fixtures(default_fixture_dir()) if t.stage == "main")
            lookup = existence_lookup(by_h)
        except (OSError, FixtureError):
            lookup = None
        _emit(markdown_by_h(regroup_by_h(rows, lookup)), args.output)
    else:
        _emit(serialize(rows, args.format), args.output)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        fixtures = load_fixtures(_fixture_dir(args))
    except (OSError, FixtureError) as exc:
        log.error("%s", exc)
        return 2
    sc = Scenario()
    rows = enumerate_solutions(sc, args.workers)
    main = main_theorem_rows(rows, sc)
    failed = False
    for report in diff_all(fixtures, rows, main):
        if report.empty:
            print(f"{report.table}: ok")
        else:
            failed = True
            for line in report.lines():
                print(line)
    return 1 if failed else 0


def cmd_oracle(args: argparse.Namespace) -> int:
    from qfano.oracle import brute_force_oracle

    sc = scenario_from(args)
    oracle_rows = brute_force_oracle(sc)
    search_rows = enumerate_solutions(sc)
    _emit(serialize(oracle_rows, args.format), args.output)
    if set(oracle_rows) != set(search_rows):
        for r in sorted(set(oracle_rows) - set(search_rows), key=lambda r: r.sort_key()):
            log.error("oracle only: %s h=%d kx3=%s N=%d", r.case, r.h, q_str(r.kx3), r.N)
        for r in sorted(set(search_rows) - set(oracle_rows), key=lambda r: r.sort_key()):
            log.error("search only: %s h=%d kx3=%s N=%d", r.case, r.h, q_str(r.kx3), r.N)
        return 1
    log.info("oracle and search agree on %d rows", len(oracle_rows))
    return 0


def _family(args: argparse.Namespace) -> str:
    case = args.case
    if case == "point":
        if args.type is None:
            raise ValueError("--case point needs --type")
        case = args.type
    if case == "C":
        if args.base is None:
            raise ValueError("--case C needs --base")
        return TAG_C_P2 if args.base == "P2" else TAG_C_F20
    if case in (TAG_E1, TAG_E1_ZU1):
        return "E1"
    if case in (TAG_C_P2, TAG_C_F20, TAG_D, TAG_CREPANT):
        return case
    kind = case.split("/")[0] if case == "E5/E11" else case
    for tag in POINT_TAGS:
        if kind in tag.split("/"):
            family = f"point:{tag}"
            assert family in SEARCH_FAMILIES
            return family
    raise ValueError(f"no contraction family for case {case!r}")


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        family = _family(args)
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    sc = Scenario()
    cc = ClassCoefficients(args.z, args.u)
    try:
        run = BirationalRun(args.kx3, sc.r, sc.alpha, args.e, args.flips)
        out, problems = candidate_problems(sc, family, run, cc)
    except ValueError as exc:
        print(f"invalid candidate: {exc}")
        return 1
    print(f"case: {family}")
    for name in ("kx_prime_3", "l_C", "genus_slack", "ke_prime_2", "two_l2", "delta_l", "deg_F"):
        value = getattr(out, name)
        if value is not None:
            print(f"{name}: {q_str(value)}")
    for name, value in out.residuals:
        print(f"residual {name}: {q_str(value)}")
    for problem in problems:
        print(f"violated: {problem}")
    print("valid" if not problems else "invalid")
    return 0 if not problems else 1


def cmd_rr(args: argparse.Namespace) -> int:
    try:
        h = h0_antik(args.kx3, args.n)
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    print(f"h={q_str(h)}")
    print(f"kc2={q_str(k_c2(args.n))}")
    if args.n > MAX_AXIAL_WEIGHT:
        log.warning("N=%d exceeds %d, so -K.c2 <= 0", args.n, MAX_AXIAL_WEIGHT)
    if h.denominator != 1:
        log.warning("h=%s is not an integer", q_str(h))
    return 0


COMMANDS = {
    "enumerate": cmd_enumerate,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "eval": cmd_eval,
    "rr": cmd_rr,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="qfano: %(levelname)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
