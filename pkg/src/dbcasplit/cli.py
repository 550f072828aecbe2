"""Command line front end: ``extract``, ``split``, ``random-split``, ``report``, ``score``.

Settings come from a YAML config file (``--config``) and can be overridden by
flags. Example config::

    manifest: manifest.yaml
    out: runs/europarl
    seed: 1
    preprocess: {max_words: 30, dedup: true, subsample: 300000}
    filter: {top_k_excluded: 200, min_count: 10, weight_threshold: 0.5}
    split:
      train_fraction: 0.85
      candidate_pool: 100
      divergence: {target_compound_divergence: 1.0}

On failure the last line on stderr is ``error<TAB>ErrorType<TAB>message``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import yaml

from .atoms import FilterPolicy, build_inventories
from .cache import VectorizedCorpus
from .corpus import Manifest, load_manifest_corpus, preprocess, subsample
from .divergence import DivergenceConfig
from .errors import DBCAError, ValidationError
from .metrics import ChrfConfig, chrf, generalisation_score, mean
from .splitter import (
    SplitConfig,
    evaluate_external_split,
    greedy_split,
    random_split,
    read_ids,
    write_split,
)

log = logging.getLogger("dbcasplit")


@dataclass
class PipelineConfig:
    manifest: Path | None = None
    out: Path = Path("out")
    seed: int = 0
    languages: list[str] = field(default_factory=list)
    max_words: int = 30
    dedup: bool = True
    subsample: int | None = None
    filter: FilterPolicy = FilterPolicy()
    split: SplitConfig = SplitConfig()

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        return cls.from_dict(data, base=path.parent)

    @classmethod
    def from_dict(cls, data: dict, base=Path(".")) -> "PipelineConfig":
        known = {"manifest", "out", "seed", "languages", "preprocess", "filter", "split"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        pre = data.get("preprocess") or {}
        try:
            cfg = cls(
                manifest=Path(base) / data["manifest"] if data.get("manifest") else None,
                out=Path(base) / data.get("out", "out"),
                seed=int(data.get("seed", 0)),
                languages=list(data.get("languages") or []),
                max_words=int(pre.get("max_words", 30)),
                dedup=bool(pre.get("dedup", True)),
                subsample=pre.get("subsample"),
                filter=FilterPolicy(**(data.get("filter") or {})),
                split=SplitConfig.from_dict(data.get("split") or {}),
            )
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"invalid config: {exc}") from None
        return cfg

    def extract_dict(self) -> dict:
        return {
            "max_words": self.max_words,
            "dedup": self.dedup,
            "subsample": self.subsample,
            "seed": self.seed,
            "languages": self.languages,
            "filter": asdict(self.filter),
        }


def _hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode("utf-8")).hexdigest()[:16]


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True, ensure_ascii=False)
        f.write("\n")


def cmd_extract(config: PipelineConfig, out=None) -> dict:
    """Parse, preprocess, build inventories and write dumps plus the bag cache."""
    if config.manifest is None:
        raise ValidationError("no manifest given (use --manifest or the config key 'manifest')")
    manifest = Manifest.load(config.manifest)
    out = Path(out or config.out)
    sentences = load_manifest_corpus(manifest)
    corpus = preprocess(sentences, config.max_words, config.dedup)
    if config.subsample is not None:
        corpus = subsample(corpus, int(config.subsample), config.seed)
    if config.languages:
        missing = set(config.languages) - set(manifest.languages)
        if missing:
            raise ValidationError(f"languages not in manifest: {', '.join(sorted(missing))}")
    if not len(corpus):
        raise ValidationError("corpus is empty after preprocessing")

    inventories = build_inventories(corpus, config.filter)
    vc = VectorizedCorpus.build(corpus.sentences, inventories)
    if config.languages:
        vc.target_texts = {lang: vc.target_texts[lang] for lang in config.languages}

    out.mkdir(parents=True, exist_ok=True)
    with open(out / "atoms.tsv", "w", encoding="utf-8", newline="\n") as f:
        inventories.atoms.dump(f)
    with open(out / "compounds.tsv", "w", encoding="utf-8", newline="\n") as f:
        inventories.compounds.dump(f)
    vc.save(out / "cache")

    summary = {
        "sentences_read": len(sentences),
        "sentences_kept": len(corpus),
        "retained_lemmas": len(inventories.retained_lemmas),
        "atom_types": len(inventories.atoms),
        "compound_types": len(inventories.compounds),
        "retained_compound_types": inventories.compounds.n_retained,
        "seed": config.seed,
        "config": config.extract_dict(),
        "config_hash": _hash(config.extract_dict()),
        "cache_fingerprint": vc.fingerprint(),
    }
    _write_json(out / "extract.json", summary)
    return summary


def parse_seeds(text) -> list[int]:
    """``"3"`` -> [3]; ``"1..3"`` -> [1, 2, 3]; ``"1,5"`` -> [1, 5]."""
    if isinstance(text, int):
        return [text]
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(s) for s in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed specification {text!r}") from None


def cmd_split(cache, config: SplitConfig, seeds: Sequence[int], out) -> list[dict]:
    vc = VectorizedCorpus.load(cache)
    out = Path(out)
    summaries = []
    for seed in seeds:
        cfg = replace(config, seed=seed)
        result = greedy_split(vc, cfg)
        target = out if len(seeds) == 1 else out / f"seed_{seed}"
        write_split(result, vc, target)
        summaries.append(result.summary())
    return summaries


def cmd_random_split(cache, train_count: int, test_count: int, seed: int, out,
                     divergence: DivergenceConfig = DivergenceConfig()) -> dict:
    vc = VectorizedCorpus.load(cache)
    result = random_split(vc, train_count, test_count, seed, divergence)
    write_split(result, vc, out)
    return result.summary()


REPORT_COLUMNS = [
    "split", "train_sentences", "test_sentences", "train_words", "test_words",
    "unique_lemmas", "D_A", "D_C", "mean_train_length", "mean_test_length",
]


def cmd_report(cache, split_dirs=(), external=()) -> list[dict]:
    """One row per split directory or external (name, train ids, test ids) triple."""
    vc = VectorizedCorpus.load(cache)
    fingerprint = vc.fingerprint()
    rows = []
    jobs = []
    for d in split_dirs:
        d = Path(d)
        summary_path = d / "summary.json"
        if not summary_path.exists():
            raise ValidationError(f"{d} has no summary.json")
        with open(summary_path, encoding="utf-8") as f:
            summary = json.load(f)
        if summary.get("cache_fingerprint") != fingerprint:
            raise ValidationError(
                f"{d} was produced from a different cache "
                f"({summary.get('cache_fingerprint')} vs {fingerprint})"
            )
        div = DivergenceConfig(**summary.get("config", {}).get("divergence", {}))
        jobs.append((str(d), read_ids(d / "train.ids"), read_ids(d / "test.ids"), div))
    for name, train, test in external:
        jobs.append((name, read_ids(train), read_ids(test), DivergenceConfig()))
    for name, train, test, div in jobs:
        ev = evaluate_external_split(vc, train, test, div)
        s = ev.statistics
        rows.append({
            "split": name,
            "train_sentences": s.train_sentences,
            "test_sentences": s.test_sentences,
            "train_words": s.train_words,
            "test_words": s.test_words,
            "unique_lemmas": s.unique_lemmas,
            "D_A": ev.atom_divergence,
            "D_C": ev.compound_divergence,
            "mean_train_length": s.mean_train_length,
            "mean_test_length": s.mean_test_length,
        })
    return rows


def format_report_tsv(rows) -> str:
    lines = ["\t".join(REPORT_COLUMNS)]
    for r in rows:
        lines.append("\t".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in REPORT_COLUMNS))
    return "\n".join(lines) + "\n"


def format_report_pretty(rows) -> str:
    def cell(c, v):
        if c in ("D_A", "D_C"):
            return f"{v:.4f}"
        if isinstance(v, float):
            return f"{v:.1f}"
        return str(v)

    table = [REPORT_COLUMNS] + [[cell(c, r[c]) for c in REPORT_COLUMNS] for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(REPORT_COLUMNS))]
    out = []
    for k, row in enumerate(table):
        out.append("  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(row, widths))))
        if k == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def _read_segments(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def cmd_score(runs=(), values=(), config: ChrfConfig = ChrfConfig()) -> dict:
    """Generalisation report from (split, lang, hyp, ref) runs and/or (split, lang, chrF) values.

    Several entries for the same split and language are averaged before the
    ratio is taken.
    """
    scores: dict[str, dict[str, list[float]]] = {"min": {}, "max": {}}
    for split, lang, hyp_path, ref_path in runs:
        hyps = _read_segments(hyp_path)
        refs = _read_segments(ref_path)
        if len(hyps) != len(refs):
            raise ValidationError(f"{hyp_path} has {len(hyps)} lines but {ref_path} has {len(refs)}")
        scores[split].setdefault(lang, []).append(chrf(hyps, refs, config))
    for split, lang, value in values:
        scores[split].setdefault(lang, []).append(float(value))
    if not scores["min"] and not scores["max"]:
        raise ValidationError("nothing to score: give --run or --value entries")
    avg_min = {lang: mean(v) for lang, v in scores["min"].items()}
    avg_max = {lang: mean(v) for lang, v in scores["max"].items()}
    report = generalisation_score(avg_min, avg_max)
    return {
        lang: {
            "chrf_min_split": r.chrf_min_split,
            "chrf_max_split": r.chrf_max_split,
            "generalisation_score": r.generalisation_score,
            "runs_min": len(scores["min"][lang]),
            "runs_max": len(scores["max"][lang]),
        }
        for lang, r in report.languages.items()
    }


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error\tUsageError\t{message}\n")
        raise SystemExit(2)


def _fraction(text) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="YAML config file")
    common.add_argument("--seed", default=argparse.SUPPRESS,
                        help="random seed; split accepts ranges like 1..3 or lists like 1,2")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = _Parser(prog="dbca-split", description=__doc__.split("\n")[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("extract", parents=[common], help="build inventories and the bag cache")
    e.add_argument("--manifest", type=Path)
    e.add_argument("--max-words", type=int)
    e.add_argument("--no-dedup", action="store_true")
    e.add_argument("--subsample", type=int)
    e.add_argument("--top-k", type=int, dest="top_k_excluded")
    e.add_argument("--min-count", type=int)
    e.add_argument("--weight-threshold", type=_fraction)

    s = sub.add_parser("split", parents=[common], help="greedy divergence-targeted split")
    s.add_argument("--cache", type=Path, required=True)
    s.add_argument("--target-cd", type=_fraction, help="target compound divergence in [0, 1]")
    s.add_argument("--train-fraction", type=float)
    s.add_argument("--candidate-pool", type=int, help="0 scores all unassigned sentences")
    s.add_argument("--max-assigned", type=int)
    s.add_argument("--ratio-min-assigned", type=int)
    s.add_argument("--no-discard", action="store_true")

    r = sub.add_parser("random-split", parents=[common], help="uniform random baseline split")
    r.add_argument("--cache", type=Path, required=True)
    r.add_argument("--train-count", type=int, required=True)
    r.add_argument("--test-count", type=int, required=True)

    rp = sub.add_parser("report", parents=[common], help="comparison table of splits")
    rp.add_argument("--cache", type=Path, required=True)
    rp.add_argument("splits", nargs="*", type=Path, help="split output directories")
    rp.add_argument("--external", nargs=3, action="append", default=[],
                    metavar=("NAME", "TRAIN_IDS", "TEST_IDS"))

    sc = sub.add_parser("score", parents=[common], help="chrF2++ and generalisation scores")
    sc.add_argument("--run", nargs=4, action="append", default=[], metavar=("SPLIT", "LANG", "HYP", "REF"),
                    help="SPLIT is min or max; repeat for several seeds or languages")
    sc.add_argument("--value", nargs=3, action="append", default=[], metavar=("SPLIT", "LANG", "CHRF"),
                    help="an already computed chrF score")
    sc.add_argument("--char-order", type=int, default=6)
    sc.add_argument("--word-order", type=int, default=2)
    sc.add_argument("--beta", type=float, default=2.0)
    return p


def _pipeline_config(args) -> PipelineConfig:
    path = getattr(args, "config", None)
    return PipelineConfig.load(path) if path else PipelineConfig()


def _split_config(args, base: SplitConfig) -> SplitConfig:
    cfg = base
    if args.target_cd is not None:
        cfg = replace(cfg, divergence=replace(cfg.divergence, target_compound_divergence=args.target_cd))
    if args.train_fraction is not None:
        cfg = replace(cfg, train_fraction=args.train_fraction)
    if args.candidate_pool is not None:
        cfg = replace(cfg, candidate_pool=args.candidate_pool or None)
    if args.max_assigned is not None:
        cfg = replace(cfg, max_assigned=args.max_assigned)
    if args.ratio_min_assigned is not None:
        cfg = replace(cfg, ratio_min_assigned=args.ratio_min_assigned)
    if args.no_discard:
        cfg = replace(cfg, allow_discard=False)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    seed_arg = getattr(args, "seed", None)
    seeds = None
    if seed_arg is not None:
        try:
            seeds = parse_seeds(seed_arg)
        except argparse.ArgumentTypeError as exc:
            parser.error(str(exc))
        if args.command != "split" and len(seeds) != 1:
            parser.error(f"{args.command} takes a single seed, got {seed_arg!r}")
    try:
        config = _pipeline_config(args)
        out = getattr(args, "out", None) or config.out

        if args.command == "extract":
            if seeds is not None:
                config.seed = seeds[0]
            if args.manifest:
                config.manifest = args.manifest
            if args.max_words is not None:
                config.max_words = args.max_words
            if args.no_dedup:
                config.dedup = False
            if args.subsample is not None:
                config.subsample = args.subsample
            overrides = {k: getattr(args, k) for k in ("top_k_excluded", "min_count", "weight_threshold")
                         if getattr(args, k) is not None}
            if overrides:
                config.filter = replace(config.filter, **overrides)
            summary = cmd_extract(config, out)
            print(f"sentences kept: {summary['sentences_kept']} of {summary['sentences_read']}")
            print(f"retained lemmas: {summary['retained_lemmas']}")
            print(f"atom types: {summary['atom_types']}")
            print(f"retained compound types: {summary['retained_compound_types']} of {summary['compound_types']}")

        elif args.command == "split":
            cfg = _split_config(args, config.split)
            for s in cmd_split(args.cache, cfg, seeds or [config.seed], out):
                st = s["statistics"]
                print(f"seed {s['seed']}: D_A={s['atom_divergence']:.4f} D_C={s['compound_divergence']:.4f} "
                      f"train={st['train_sentences']} test={st['test_sentences']} "
                      f"discarded={s['discarded_sentences']}")

        elif args.command == "random-split":
            seed = seeds[0] if seeds is not None else config.seed
            s = cmd_random_split(args.cache, args.train_count, args.test_count, seed, out, config.split.divergence)
            print(f"seed {seed}: D_A={s['atom_divergence']:.4f} D_C={s['compound_divergence']:.4f}")

        elif args.command == "report":
            if not args.splits and not args.external:
                raise ValidationError("report needs at least one split directory or --external triple")
            rows = cmd_report(args.cache, args.splits, args.external)
            sys.stdout.write(format_report_pretty(rows))
            if getattr(args, "out", None):
                Path(args.out).mkdir(parents=True, exist_ok=True)
                with open(Path(args.out) / "report.tsv", "w", encoding="utf-8", newline="\n") as f:
                    f.write(format_report_tsv(rows))

        elif args.command == "score":
            for split, *_ in args.run + args.value:
                if split not in ("min", "max"):
                    parser.error(f"split must be 'min' or 'max', got {split!r}")
            values = []
            for split, lang, v in args.value:
                try:
                    values.append((split, lang, float(v)))
                except ValueError:
                    parser.error(f"not a number: {v!r}")
            cfg = ChrfConfig(args.char_order, args.word_order, args.beta)
            report = cmd_score(args.run, values, cfg)
            for lang in sorted(report):
                r = report[lang]
                print(f"{lang}\tmin={r['chrf_min_split']:.2f}\tmax={r['chrf_max_split']:.2f}\t"
                      f"ratio={r['generalisation_score']:.2f}")
            if getattr(args, "out", None):
                Path(args.out).mkdir(parents=True, exist_ok=True)
                _write_json(Path(args.out) / "score.json", report)
    except (DBCAError, OSError, ValueError) as exc:
        msg = str(exc).replace("\n", " ")
        sys.stderr.write(f"error\t{type(exc).__name__}\t{msg}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
