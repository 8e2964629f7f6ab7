"""Command-line entry point.

Subcommands: ``estimate-mi``, ``build-sft``, ``score``, ``evaluate``, ``simulate``.
All of them read and write JSON Lines, defaulting to stdin/stdout.

Exit codes: 0 success, 1 input or validation error, 2 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
from pathlib import Path
from typing import IO, Iterator

from . import __version__
from .config import GlobalConfig
from .databuild import BuildOptions, BuildStats, RawSample, build_records
from .errors import ConfigError, MigrError, TraceError
from .grposim import SimConfig, Simulator
from .metrics import EvalRecord, evaluate, record_from_dict, record_from_trace
from .mi import ModalityImportance, PredictionTriple, estimate_mi
from .rewards import REWARD_MODES, score_text
from .trace import parse_trace

log = logging.getLogger("migr")


class InputError(MigrError):
    """Bad user input; reported with file, line and field where known."""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


class RecordError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"field {field!r}: {message}")
        self.field = field


@contextlib.contextmanager
def _open_in(path: str | None):
    if path in (None, "-"):
        yield "<stdin>", sys.stdin
    else:
        try:
            fh = open(path, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"{path}: {exc.strerror}") from None
        with fh:
            yield path, fh


@contextlib.contextmanager
def _open_out(path: str | None):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _emit(out: IO[str], obj: dict) -> None:
    out.write(json.dumps(obj, ensure_ascii=False, sort_keys=False) + "\n")


class JsonlReader:
    """Yields ``(line_number, record)``; malformed lines are warned about or fatal under ``strict``."""

    def __init__(self, name: str, fh: IO[str], strict: bool):
        self.name, self.fh, self.strict = name, fh, strict
        self.bad = 0

    def __iter__(self) -> Iterator[tuple[int, dict]]:
        for lineno, line in enumerate(self.fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                self.reject(lineno, f"malformed JSON ({exc.msg})")
                continue
            if not isinstance(obj, dict):
                self.reject(lineno, "record must be a JSON object")
                continue
            yield lineno, obj

    def reject(self, lineno: int, message: str) -> None:
        text = f"{self.name}:{lineno}: {message}"
        if self.strict:
            raise InputError(text)
        self.bad += 1
        log.warning("%s (skipped)", text)


def _label(cfg: GlobalConfig, rec: dict, key: str, required: bool = True):
    value = rec.get(key)
    if value is None:
        if required:
            raise RecordError(key, "missing")
        return None
    try:
        return cfg.taxonomy.label(str(value))
    except KeyError:
        raise RecordError(key, f"{value!r} is not a {cfg.taxonomy.name} label") from None


def _mi(rec: dict) -> ModalityImportance:
    try:
        mi = ModalityImportance(str(rec.get("mi", "")).strip().lower())
    except ValueError:
        raise RecordError("mi", f"expected one of audio/visual/both, got {rec.get('mi')!r}") from None
    if mi is ModalityImportance.UNRESOLVED:
        raise RecordError("mi", "unresolved samples cannot be scored")
    return mi


def _trace_text(rec: dict) -> str:
    text = rec.get("trace_text", rec.get("rendered"))
    if not isinstance(text, str):
        raise RecordError("trace_text", "missing or not a string")
    return text


def _config(args, need_fau: bool = False) -> GlobalConfig:
    return GlobalConfig.load(args.taxonomy, args.tokens, args.lexicon, getattr(args, "fau_table", None), need_fau)


def cmd_estimate_mi(args) -> int:
    cfg = _config(args)
    counts = {m.value: 0 for m in ModalityImportance}
    with _open_in(args.inp) as (name, fh), _open_out(args.out) as out:
        reader = JsonlReader(name, fh, args.strict)
        for lineno, rec in reader:
            try:
                target = _label(cfg, rec, "target")
                triple = PredictionTriple.from_record(rec, cfg.taxonomy)
            except RecordError as exc:
                reader.reject(lineno, str(exc))
                continue
            mi = estimate_mi(triple, target)
            counts[mi.value] += 1
            _emit(out, {"id": rec.get("id"), "target": target.name, "mi": mi.value})
    log.info("mi counts: %s", json.dumps(counts))
    return 0


def cmd_build_sft(args) -> int:
    cfg = _config(args, need_fau=True)
    opts = BuildOptions(require_fau=args.require_fau, fau_mode=args.fau_mode, tokens=cfg.tokens)
    stats = BuildStats()
    with _open_in(args.inp) as (name, fh), _open_out(args.out) as out:
        reader = JsonlReader(name, fh, args.strict)

        def samples():
            for lineno, rec in reader:
                try:
                    yield RawSample.from_dict(rec, cfg.taxonomy, cfg.tokens)
                except ValueError as exc:
                    if args.strict:
                        raise InputError(f"{name}:{lineno}: {exc}") from None
                    log.warning("%s:%d: %s (skipped)", name, lineno, exc)
                    err = ValueError(str(exc))
                    err.line = lineno
                    yield err

        for record in build_records(samples(), cfg.fau_table, opts, stats):
            _emit(out, record.to_dict())
    summary = stats.to_dict()
    summary["malformed_lines"] = reader.bad
    if args.stats:
        Path(args.stats).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    log.info("build stats: %s", json.dumps({k: v for k, v in summary.items() if k != "errors"}))
    return 0


def cmd_score(args) -> int:
    cfg = _config(args)
    with _open_in(args.inp) as (name, fh), _open_out(args.out) as out:
        reader = JsonlReader(name, fh, args.strict)
        for lineno, rec in reader:
            try:
                target = _label(cfg, rec, "target")
                mi = _mi(rec)
                text = _trace_text(rec)
            except RecordError as exc:
                reader.reject(lineno, str(exc))
                continue
            breakdown = score_text(text, mi, target, cfg.lexicon, cfg.taxonomy, cfg.tokens)
            _emit(out, {"id": rec.get("id"), **breakdown.to_dict()})
    return 0


def _eval_record(cfg: GlobalConfig, rec: dict) -> EvalRecord:
    target = _label(cfg, rec, "target")
    if "predicted" in rec or "reasoning_emotion" in rec:
        return record_from_dict(rec, cfg.taxonomy)
    text = _trace_text(rec)
    try:
        trace = parse_trace(text, cfg.tokens)
    except TraceError:
        return EvalRecord(str(rec.get("id", "")), target, None, None)
    return record_from_trace(str(rec.get("id", "")), target, trace, cfg.lexicon, cfg.taxonomy)


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    records = []
    with _open_in(args.inp) as (name, fh):
        reader = JsonlReader(name, fh, args.strict)
        for lineno, rec in reader:
            try:
                records.append(_eval_record(cfg, rec))
            except RecordError as exc:
                reader.reject(lineno, str(exc))
    if not records:
        raise InputError(f"{name}: no valid records to evaluate")
    report = evaluate(records, cfg.taxonomy)
    fmt = args.format or ("text" if args.report and not args.report.endswith(".json") else "json")
    body = report.to_text(args.name) if fmt == "text" else json.dumps(report.to_dict(), indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(body, encoding="utf-8")
    else:
        sys.stdout.write(body)
    return 0


def cmd_simulate(args) -> int:
    try:
        sim_cfg = SimConfig(steps=args.steps, group_size=args.group_size, lr=args.lr, reward_mode=args.reward_mode,
                            seed=args.seed, eval_rollouts=args.eval_rollouts, eval_every=args.eval_every,
                            sentence_count=args.sentence_count, l2=args.l2)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    cfg = _config(args)
    result = Simulator(sim_cfg, cfg.taxonomy, cfg.lexicon, cfg.tokens).train()
    with _open_out(args.out) as out:
        for line in result.lines():
            _emit(out, line)
    final = result.final
    log.info("final: order_rate=%.4f consistency_rate=%.4f answer_accuracy=%.4f",
             final.order_rate, final.consistency_rate, final.answer_accuracy)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--in", dest="inp", metavar="PATH", help="input JSON Lines (default stdin)")
    common.add_argument("--out", metavar="PATH", help="output JSON Lines (default stdout)")
    common.add_argument("--taxonomy", help="taxonomy JSON path or built-in name (dfew, mafw, emer)")
    common.add_argument("--tokens", metavar="PATH", help="token config JSON")
    common.add_argument("--lexicon", metavar="PATH", help="lexicon JSON")
    common.add_argument("--strict", action="store_true", help="fail on the first malformed line")

    parser = _Parser(prog="migr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("estimate-mi", parents=[common], help="modality importance per sample")
    p.set_defaults(func=cmd_estimate_mi)

    p = sub.add_parser("build-sft", parents=[common], help="build the modality-ordered SFT corpus")
    p.add_argument("--fau-table", metavar="PATH", help="FAU-emotion table JSON")
    p.add_argument("--require-fau", action="store_true", help="drop samples whose action units do not match")
    p.add_argument("--fau-mode", choices=("exact", "subset"), default="exact")
    p.add_argument("--stats", metavar="PATH", help="write build statistics JSON here")
    p.set_defaults(func=cmd_build_sft)

    p = sub.add_parser("score", parents=[common], help="score rollouts with the three rewards")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", parents=[common], help="recognition and consistency metrics")
    p.add_argument("--report", metavar="PATH", help="report path (default stdout)")
    p.add_argument("--format", choices=("json", "text"), help="report format (default from extension)")
    p.add_argument("--name", default="model", help="row label in the text report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", parents=[common], help="toy group-relative policy optimization")
    p.add_argument("--steps", type=int, default=SimConfig.steps)
    p.add_argument("--group-size", type=int, default=SimConfig.group_size)
    p.add_argument("--lr", type=float, default=SimConfig.lr)
    p.add_argument("--reward-mode", choices=REWARD_MODES, default=SimConfig.reward_mode)
    p.add_argument("--seed", type=int, default=SimConfig.seed)
    p.add_argument("--eval-rollouts", type=int, default=SimConfig.eval_rollouts)
    p.add_argument("--eval-every", type=int, default=SimConfig.eval_every)
    p.add_argument("--sentence-count", type=int, default=SimConfig.sentence_count)
    p.add_argument("--l2", type=float, default=SimConfig.l2)
    p.set_defaults(func=cmd_simulate)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    level = (logging.ERROR if args.quiet else logging.DEBUG if args.verbose > 1
             else logging.INFO if args.verbose else logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("migr: %(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False
    try:
        return args.func(args)
    except (InputError, ConfigError) as exc:
        log.error("%s", exc)
        return 1
    except BrokenPipeError:
        return 0
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
