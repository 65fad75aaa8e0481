"""Command line interface: ``openlattice run | list-models | check``."""
from __future__ import annotations

import argparse
import contextlib
import inspect
import json
import logging
import sys

from .errors import DomainError, HypothesisViolation, NumericalError, ResourceError
from .experiments.config import (EXIT_HYPOTHESIS, EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE, EXIT_RESOURCE,
                                 EXIT_VERDICT, run_config)
from .family import assemble_closed, check_frustration_free
from .linalg import purity
from .models import MODELS, build_model
from .superop import fixed_point, spectral_data


def _threads(n: int | None):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise DomainError(f"parameter {item!r} must look like key=value")
        k, v = item.split("=", 1)
        out[k] = _value(v)
    return out


def check_hypotheses(name: str, params: dict, dim_cap: int | None = None) -> dict:
    """Verify a model's declared flags; returns claimed, measured and agreement per flag."""
    fam = build_model(name, **params)
    if dim_cap is not None:
        fam.dim_cap = dim_cap
    gen = assemble_closed(fam)
    spec = spectral_data(gen)
    rho, unique = fixed_point(gen)
    measured = {
        "unique_fixed_point": unique,
        "pure_fixed_point": purity(rho) >= 1 - 1e-8,
        "frustration_free": check_frustration_free(fam).passed,
        # finite-size proxy: unique fixed point and a positive gap
        "rapid_mixing": unique and spec.peripheral_ok and spec.spectral_gap > 1e-9,
    }
    claimed = fam.spec.flags()
    return {
        "model": name,
        "params": fam.spec.parameters,
        "spectral_gap": spec.spectral_gap,
        "flags": {k: {"claimed": claimed[k], "measured": bool(measured[k]),
                      "agrees": claimed[k] == bool(measured[k])} for k in claimed},
    }


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="openlattice", description=__doc__)
    p.add_argument("--threads", type=int, default=None, help="cap BLAS/LAPACK threads")
    p.add_argument("--dim-cap", type=int, default=None, help="operator-space dimension cap")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None, help="override root_seed")
    run.add_argument("--out", default=None, help="override output_dir")
    sub.add_parser("list-models", help="list the model zoo")
    chk = sub.add_parser("check", help="verify a model's declared hypothesis flags")
    chk.add_argument("model")
    chk.add_argument("--hypotheses", action="store_true", help="check all declared flags (default)")
    chk.add_argument("--size", type=_value, default=None, help="chain length or grid shape, e.g. 4 or [2,3]")
    chk.add_argument("--param", action="append", metavar="KEY=VALUE", help="model parameter")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    with _threads(args.threads):
        if args.command == "list-models":
            for name, factory in MODELS.items():
                doc = (inspect.getdoc(factory) or "").splitlines()[0]
                print(f"{name:22s} {inspect.signature(factory)}  {doc}")
            return EXIT_OK
        if args.command == "run":
            result = run_config(args.config, seed=args.seed, out=args.out, dim_cap=args.dim_cap)
            for entry in result.manifest.get("experiments", []):
                status = entry.get("error") or ("pass" if entry["passed"] else "FAIL")
                print(f"[{entry['index']}] {entry['type']} {entry['model']}: {status}")
            if "error" in result.manifest:
                print(result.manifest["error"], file=sys.stderr)
            return result.exit_code
        try:
            params = _params(args.param)
            if args.size is not None:
                params["size"] = args.size
            report = check_hypotheses(args.model, params, args.dim_cap)
        except DomainError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        except ResourceError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RESOURCE
        except HypothesisViolation as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_HYPOTHESIS
        except NumericalError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        print(json.dumps(report, indent=2))
        return EXIT_OK if all(f["agrees"] for f in report["flags"].values()) else EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
