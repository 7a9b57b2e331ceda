"""Command-line entry point: ``verbseq [--config PATH] [--out DIR] [--seed N] CMD``.

Exit status is 0 on success, 1 on a domain or validation error and 2 on an
I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .clusterer import UnitClustering, cluster_units
from .config import RunConfig
from .corpus import (corpus_transitions, extract_sequences, load_corpus, sample_matrix,
                     tabulate_distributions, validate_corpus, write_corpus)
from .errors import VerbseqError
from .markov import HmmFit, baum_welch, bmu_sequences, empirical_transitions
from .som import SomMap, hit_histogram, train_som
from .synth import default_paper_spec, generate_corpus, load_spec, write_sidecar

log = logging.getLogger("verbseq")

CONFIG_NAME = "run.cfg"
SOM_NAME = "som.json"
CLUSTERS_NAME = "clusters.json"
HMM_NAME = "hmm.json"
TRANSITIONS_NAME = "transitions.csv"

REPORT_KEYS = ("part", "ground", "agent", "causal", "impact", "negation", "inertia",
               "category", "tense")


class UsageError(VerbseqError):
    pass


# -- file helpers -------------------------------------------------------------

def write_matrix(matrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(matrix, dtype=float):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return np.array([[float(v) for v in line.split(",")] for line in fh if line.strip()])


def _write_json(data, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def _write_text(text: str, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _corpus_path(cfg: RunConfig, given) -> str:
    path = given or cfg.corpus
    if not path:
        raise UsageError("no corpus given (argument or 'corpus' config key)")
    return path


# -- commands -----------------------------------------------------------------

def cmd_validate(path, stdout=sys.stdout) -> int:
    with open(path, encoding="utf-8", newline="") as fh:
        violations = validate_corpus(fh)
    for v in violations:
        print(f"{path}:{v.line}: {v.message}", file=stdout)
    if violations:
        return 1
    print(f"{path}: ok", file=stdout)
    return 0


def cmd_stats(path, stdout=sys.stdout) -> int:
    stdout.write(tabulate_distributions(load_corpus(path)).format())
    return 0


def cmd_synth(out_dir, n_texts: int, seed: int, spec_path=None, stdout=sys.stdout) -> int:
    spec = load_spec(spec_path) if spec_path else default_paper_spec()
    corpus, truth = generate_corpus(spec, n_texts, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "corpus.csv", "w", encoding="utf-8", newline="") as fh:
        write_corpus(corpus, fh)
    with open(out / "truth.csv", "w", encoding="utf-8", newline="") as fh:
        write_sidecar(truth, fh)
    print(f"wrote {len(corpus.texts)} texts, {len(corpus.tokens)} tokens to {out}", file=stdout)
    return 0


def cmd_train(cfg: RunConfig, stdout=sys.stdout) -> int:
    """encode -> windows -> SOM -> clusters -> BMU sequences -> Markov/HMM."""
    corpus = load_corpus(_corpus_path(cfg, None))
    samples = corpus_transitions(corpus, cfg.replication)
    x = sample_matrix(samples)
    som = train_som(x, cfg.som_rows, cfg.som_cols, cfg.som_epochs,
                    cfg.som_initial_radius, cfg.som_final_radius, seed=cfg.seed_for("som"))
    hits = hit_histogram(som, x)
    clustering = cluster_units(som.prototypes, hits, k=cfg.k or None, k_min=cfg.k_min,
                               k_max=cfg.k_max, include_empty=cfg.cluster_empty_units)
    sequences, _ = extract_sequences(corpus)
    symbols = bmu_sequences(sequences, som)
    matrix = empirical_transitions(symbols, som.n_units, cfg.alpha)
    hmm_seed = cfg.seed_for("hmm-init")
    model, trace = baum_welch(symbols, cfg.hmm_states, som.n_units, seed=hmm_seed,
                              max_iter=cfg.hmm_max_iter, tol=cfg.hmm_tol)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    som.save(out / SOM_NAME)
    clustering.save(out / CLUSTERS_NAME)
    HmmFit(model, trace, hmm_seed).save(out / HMM_NAME)
    write_matrix(matrix, out / TRANSITIONS_NAME)
    cfg.save(out / CONFIG_NAME)
    print(f"{len(x)} windows, {int((hits > 0).sum())}/{som.n_units} units hit, "
          f"k = {clustering.k} (DB {clustering.db_score:.4f}), "
          f"HMM log-likelihood {trace[-1]:.4f}", file=stdout)
    return 0


def _load_artifacts(artifacts):
    art = Path(artifacts)
    cfg = RunConfig.load(art / CONFIG_NAME)
    som = SomMap.load(art / SOM_NAME)
    clustering = UnitClustering.load(art / CLUSTERS_NAME)
    return art, cfg, som, clustering


def _segments(corpus, transitions) -> dict:
    return {text.text_id: [{"first_sentence": s.first_sentence,
                            "last_sentence": s.last_sentence, "cluster": s.cluster}
                           for s in analysis.segment_text(text, transitions)]
            for text in corpus.texts}


def cmd_report(artifacts, corpus_path=None, out_dir=None, stdout=sys.stdout) -> int:
    art, cfg, som, clustering = _load_artifacts(artifacts)
    corpus = load_corpus(_corpus_path(cfg, corpus_path))
    matrix = read_matrix(art / TRANSITIONS_NAME)
    transitions = analysis.assign_transitions(corpus, som, clustering)
    hits = hit_histogram(som, corpus_transitions(corpus))
    out = Path(out_dir) if out_dir else art
    out.mkdir(parents=True, exist_ok=True)

    summary = [f"windows: {len(transitions)}, clusters: {clustering.k}, "
               f"none share: {100 * analysis.none_share(transitions):.2f}%", ""]
    assoc = ["key,statistic,dof,p_value,low_expected_cells,warning"]
    for key in REPORT_KEYS:
        table = analysis.crosstab(transitions, key)
        _write_text(table.to_csv(), out / f"crosstab_{key}.csv")
        summary.append(table.format())
        try:
            res = analysis.association_test(table)
        except VerbseqError as exc:
            assoc.append(f"{key},,,,,{exc}")
            summary += [f"chi-square: not computed ({exc})", ""]
            continue
        assoc.append(f"{key},{res.statistic!r},{res.dof},{res.p_value!r},"
                     f"{res.low_expected_cells},{res.warning or ''}")
        summary += [f"chi-square = {res.statistic:.3f}, dof = {res.dof}, p = {res.p_value:.3g}"
                    + (f" ({res.warning})" if res.warning else ""), ""]
    _write_text("\n".join(assoc) + "\n", out / "association.csv")

    pairs = analysis.typical_pairs(som, clustering, hits, matrix,
                                   min_support=cfg.min_support, top_n=cfg.top_n)
    _write_json({str(c): [p.to_dict() for p in ps] for c, ps in pairs.items()},
                out / "typical_pairs.json")
    summary.append("typical pairs")
    for c, ps in pairs.items():
        for p in ps:
            summary.append(f"  cluster {c}: {analysis.format_pattern(p.pattern)}  "
                           f"(unit {p.unit}, support {p.support}, score {p.score:.3f})")
    _write_json(_segments(corpus, transitions), out / "segments.json")
    text = "\n".join(summary) + "\n"
    _write_text(text, out / "report.txt")
    stdout.write(text)
    return 0


def cmd_segment(artifacts, corpus_path=None, out_dir=None, stdout=sys.stdout) -> int:
    _, cfg, som, clustering = _load_artifacts(artifacts)
    corpus = load_corpus(_corpus_path(cfg, corpus_path))
    transitions = analysis.assign_transitions(corpus, som, clustering)
    segments = _segments(corpus, transitions)
    for text_id, spans in segments.items():
        cells = " | ".join(f"{s['first_sentence']}-{s['last_sentence']}:{s['cluster']}"
                           for s in spans)
        print(f"{text_id}  {cells}", file=stdout)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        _write_json(segments, Path(out_dir) / "segments.json")
    return 0


# -- argument handling ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="verbseq",
                                     description="Structure discovery in verb sequences.")
    parser.add_argument("--config", help="run configuration (key = value)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="run seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a corpus file")
    p.add_argument("corpus")
    p = sub.add_parser("stats", help="category/tense distribution tables")
    p.add_argument("corpus")
    p = sub.add_parser("synth", help="generate a synthetic corpus and its ground truth")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", help="regime spec (JSON)")
    src.add_argument("--paper-default", action="store_true", help="use the bundled spec")
    p.add_argument("-n", "--n-texts", type=int, default=100)
    p = sub.add_parser("train", help="fit SOM, clusters and sequence models")
    p.add_argument("corpus", nargs="?")
    for name in ("report", "segment"):
        p = sub.add_parser(name, help=f"{name} a corpus against trained artifacts")
        p.add_argument("artifacts")
        p.add_argument("corpus", nargs="?")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    changes = {}
    if args.out is not None:
        changes["out"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "corpus", None) and args.command == "train":
        changes["corpus"] = args.corpus
    return cfg.replace(**changes)


def run(argv=None, stdout=sys.stdout) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return cmd_validate(args.corpus, stdout)
        if args.command == "stats":
            return cmd_stats(args.corpus, stdout)
        cfg = _config(args)
        if args.command == "synth":
            if args.n_texts < 1:
                raise UsageError("--n-texts must be >= 1")
            return cmd_synth(cfg.out, args.n_texts, cfg.seed_for("synth"),
                             args.spec, stdout)
        if args.command == "train":
            return cmd_train(cfg, stdout)
        if args.command == "report":
            return cmd_report(args.artifacts, args.corpus, args.out, stdout)
        return cmd_segment(args.artifacts, args.corpus, args.out, stdout)
    except OSError as exc:
        print(f"verbseq: I/O error: {exc}", file=sys.stderr)
        return 2
    except (VerbseqError, ValueError, KeyError) as exc:
        print(f"verbseq: error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
