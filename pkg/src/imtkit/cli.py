"""Batch front-end over the same engine code path as the service.

Subcommands: train (build vocab/model artifacts), translate (batch decode),
eval (bleu / ngram-acc / simulate), tune-knn (grid search on a dev split)
and serve (run the HTTP service). Every command that involves randomness
takes --seed.
"""

from __future__ import annotations

import itertools
import json
import os
from pathlib import Path

import click

from .engine import EngineSettings, TranslationEngine
from .eval_harness import (
    EvalReport,
    corpus_bleu,
    ngram_accuracy,
    ngram_accuracy_counts,
    simulate_post_edit,
    suggestion_ngram_accuracy_counts,
)
from .knn_augment import KnnConfig
from .model_core import build_lexicon_model, build_toy_lm, save_model
from .service.state import ModelBundle
from .termbase import Termbase
from .tm_index import TmStore, parse_pairs
from .tokenizer import train_bpe


def _read_pairs(path: Path) -> list[tuple[str, str]]:
    pairs, warnings = parse_pairs(path.read_text(encoding="utf-8"))
    for warning in warnings:
        click.echo(f"warning: {path.name}: {warning}", err=True)
    return pairs


def _load_store(tm_path: Path | None) -> TmStore:
    store = TmStore()
    if tm_path is not None:
        store.add_entries(_read_pairs(tm_path), origin="uploaded")
    return store


def _engine_settings(engine: str, min_match_rate: float, beam: int,
                     knn_k: int, knn_lambda: float, knn_temperature: float,
                     knn_tau: float, seed: int) -> EngineSettings:
    if engine == "tm":
        engine = "tm_conditioned"
    return EngineSettings(
        engine=engine, min_match_rate=min_match_rate, beam=beam,
        knn=KnnConfig(k=knn_k, lam=knn_lambda, temperature=knn_temperature, tau=knn_tau),
        seed=seed,
    )


def _build_engine(model_dir: Path, settings: EngineSettings,
                  tm_path: Path | None) -> TranslationEngine:
    bundle = ModelBundle.load(model_dir)
    return TranslationEngine(bundle.model, bundle.lm, _load_store(tm_path),
                             Termbase(), settings)


def _engine_options(fn):
    fn = click.option("--engine", type=click.Choice(["plain", "tm", "knn"]),
                      default="plain", show_default=True)(fn)
    fn = click.option("--tm", "tm_path", type=click.Path(exists=True, path_type=Path),
                      default=None, help="TM store file (TSV or JSONL)")(fn)
    fn = click.option("--min-match-rate", type=float, default=0.7, show_default=True)(fn)
    fn = click.option("--beam", type=int, default=4, show_default=True)(fn)
    fn = click.option("--knn-k", type=int, default=4, show_default=True)(fn)
    fn = click.option("--knn-lambda", type=float, default=0.4, show_default=True)(fn)
    fn = click.option("--knn-temperature", type=float, default=5.0, show_default=True)(fn)
    fn = click.option("--knn-tau", type=float, default=5.0, show_default=True)(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    return fn


@click.group()
def main():
    """Interactive machine translation workbench."""


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path),
              required=True, help="Parallel corpus (TSV or JSONL with source/target)")
@click.option("--mono", "mono_path", type=click.Path(exists=True, path_type=Path),
              default=None, help="Monolingual LM corpus; defaults to the target side")
@click.option("--merges", type=int, default=200, show_default=True)
@click.option("--smoothing", type=float, default=0.1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
def train(corpus_path: Path, mono_path: Path | None, merges: int,
          smoothing: float, out_dir: Path):
    """Train vocabularies and the toy models; write JSON artifacts to --out."""
    pairs = _read_pairs(corpus_path)
    if not pairs:
        raise click.ClickException("corpus contains no usable pairs")
    mono = (mono_path.read_text(encoding="utf-8").splitlines()
            if mono_path is not None else [tgt for _, tgt in pairs])
    vocab_src = train_bpe([src for src, _ in pairs], merges)
    vocab_tgt = train_bpe([tgt for _, tgt in pairs] + [m for m in mono if m.strip()], merges)
    model = build_lexicon_model(pairs, vocab_src, vocab_tgt, smoothing=smoothing)
    lm = build_toy_lm(mono, vocab_tgt, smoothing=smoothing)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab_src.save(out_dir / "vocab_src.json")
    vocab_tgt.save(out_dir / "vocab_tgt.json")
    save_model(model, out_dir / "lexicon_model.json")
    save_model(lm, out_dir / "lm.json")
    click.echo(f"wrote artifacts to {out_dir} "
               f"(|src vocab|={len(vocab_src)}, |tgt vocab|={len(vocab_tgt)})")


@main.command()
@click.option("--model", "model_dir", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--input", "input_path", type=click.Path(exists=True, path_type=Path),
              required=True, help="Source sentences, one per line")
@click.option("--output", "output_path", type=click.Path(path_type=Path), required=True)
@_engine_options
def translate(model_dir: Path, input_path: Path, output_path: Path, engine: str,
              tm_path: Path | None, min_match_rate: float, beam: int, knn_k: int,
              knn_lambda: float, knn_temperature: float, knn_tau: float, seed: int):
    """Batch-translate a file of source sentences."""
    settings = _engine_settings(engine, min_match_rate, beam, knn_k, knn_lambda,
                                knn_temperature, knn_tau, seed)
    eng = _build_engine(model_dir, settings, tm_path)
    lines = input_path.read_text(encoding="utf-8").splitlines()
    out = [eng.draft(line) if line.strip() else "" for line in lines]
    output_path.write_text("\n".join(out) + ("\n" if out else ""), encoding="utf-8")
    click.echo(f"translated {sum(1 for l in lines if l.strip())} sentences")


@main.group("eval")
def eval_group():
    """Evaluation harness: bleu, ngram-acc, simulate."""


@eval_group.command()
@click.option("--hyp", "hyp_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--ref", "ref_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--json", "as_json", is_flag=True, default=False)
def bleu(hyp_path: Path, ref_path: Path, as_json: bool):
    """Corpus BLEU between two line-aligned files."""
    hyps = hyp_path.read_text(encoding="utf-8").splitlines()
    refs = ref_path.read_text(encoding="utf-8").splitlines()
    score = corpus_bleu(hyps, refs)
    if as_json:
        click.echo(json.dumps({"bleu": score}))
    else:
        click.echo(f"BLEU = {score:.2f}  ({len(hyps)} sentences)")


@eval_group.command("ngram-acc")
@click.option("--model", "model_dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--test", "test_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--n", "ns", type=int, multiple=True, default=(1, 2, 3), show_default=True)
@click.option("--unit", type=click.Choice(["word", "subword"]), default="word",
              show_default=True)
@click.option("--suggestions", type=click.Choice(["none", "3best", "3best+lm"]),
              default="none", show_default=True,
              help="Score a hit when any displayed suggestion matches")
@click.option("--json", "as_json", is_flag=True, default=False)
@_engine_options
def ngram_acc(model_dir: Path, test_path: Path, ns, unit: str, suggestions: str,
              as_json: bool, engine: str, tm_path: Path | None, min_match_rate: float,
              beam: int, knn_k: int, knn_lambda: float, knn_temperature: float,
              knn_tau: float, seed: int):
    """Prefix-replay N-gram accuracy on a parallel test file."""
    settings = _engine_settings(engine, min_match_rate, beam, knn_k, knn_lambda,
                                knn_temperature, knn_tau, seed)
    eng = _build_engine(model_dir, settings, tm_path)
    test_set = _read_pairs(test_path)
    report = EvalReport()
    for n in ns:
        if suggestions == "none":
            hits, denom = ngram_accuracy_counts(eng, test_set, n, unit)
        else:
            _, hits, denom = suggestion_ngram_accuracy_counts(
                eng, test_set, n, include_lm=suggestions == "3best+lm")
        report.ngram_acc[n] = hits / denom if denom else 0.0
        report.counts[f"ngram_{n}_hits"] = hits
        report.counts[f"ngram_{n}_denominator"] = denom
    if as_json:
        click.echo(json.dumps(report.to_json()))
    else:
        click.echo(f"{'N':>3}  {'accuracy':>9}  {'hits':>6}  {'denominator':>11}")
        for n in ns:
            click.echo(f"{n:>3}  {report.ngram_acc[n]:>9.4f}  "
                       f"{report.counts[f'ngram_{n}_hits']:>6}  "
                       f"{report.counts[f'ngram_{n}_denominator']:>11}")


@eval_group.command()
@click.option("--model", "model_dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--test", "test_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--policy", type=click.Choice(["accept_prefix", "type_through"]),
              default="accept_prefix", show_default=True)
@click.option("--json", "as_json", is_flag=True, default=False)
@_engine_options
def simulate(model_dir: Path, test_path: Path, policy: str, as_json: bool, engine: str,
             tm_path: Path | None, min_match_rate: float, beam: int, knn_k: int,
             knn_lambda: float, knn_temperature: float, knn_tau: float, seed: int):
    """Simulated post-editor keystroke savings (a desk-scale proxy metric)."""
    settings = _engine_settings(engine, min_match_rate, beam, knn_k, knn_lambda,
                                knn_temperature, knn_tau, seed)
    eng = _build_engine(model_dir, settings, tm_path)
    test_set = _read_pairs(test_path)
    savings = simulate_post_edit(eng, test_set, policy)
    if as_json:
        click.echo(json.dumps({"keystroke_savings": savings, "policy": policy}))
    else:
        click.echo(f"keystroke savings = {savings:.4f} (policy {policy})")


@main.command("tune-knn")
@click.option("--model", "model_dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--dev", "dev_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--tm", "tm_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--k", "k_grid", default="4", show_default=True, help="Comma-separated values")
@click.option("--lambda", "lambda_grid", default="0.4", show_default=True)
@click.option("--temperature", "temperature_grid", default="5", show_default=True)
@click.option("--tau", "tau_grid", default="5", show_default=True)
@click.option("--min-match-rate", type=float, default=0.7, show_default=True)
@click.option("--objective", type=click.Choice(["ngram1", "bleu"]), default="ngram1",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def tune_knn(model_dir: Path, dev_path: Path, tm_path: Path, k_grid: str,
             lambda_grid: str, temperature_grid: str, tau_grid: str,
             min_match_rate: float, objective: str, seed: int):
    """Grid-search kNN hyper-parameters on a dev split; prints the best config."""
    ks = [int(v) for v in k_grid.split(",")]
    lams = [float(v) for v in lambda_grid.split(",")]
    temps = [float(v) for v in temperature_grid.split(",")]
    taus = [float(v) for v in tau_grid.split(",")]
    dev_set = _read_pairs(dev_path)
    best: tuple[float, tuple, KnnConfig] | None = None
    for k, lam, temp, tau in itertools.product(ks, lams, temps, taus):
        config = KnnConfig(k=k, lam=lam, temperature=temp, tau=tau)
        settings = EngineSettings(engine="knn", min_match_rate=min_match_rate,
                                  beam=1, knn=config, seed=seed)
        eng = _build_engine(model_dir, settings, tm_path)
        if objective == "ngram1":
            score = ngram_accuracy(eng, dev_set, 1)
        else:
            hyps = [eng.draft(src) for src, _ in dev_set]
            score = corpus_bleu(hyps, [ref for _, ref in dev_set])
        key = (k, lam, temp, tau)
        if best is None or score > best[0] or (score == best[0] and key < best[1]):
            best = (score, key, config)
        click.echo(f"k={k} lambda={lam} temperature={temp} tau={tau} -> {score:.4f}",
                   err=True)
    assert best is not None
    click.echo(json.dumps({"best": best[2].to_json(), "objective": objective,
                           "score": best[0]}))


@main.command()
@click.option("--model", "model_dir", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help="Defaults to $IMTKIT_DATA_DIR or ./imtkit_data")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--frontend", "frontend_dist", type=click.Path(path_type=Path), default=None,
              help="Built frontend directory to serve under /ui")
def serve(model_dir: Path, data_dir: Path | None, port: int, host: str,
          frontend_dist: Path | None):
    """Run the post-editing HTTP service."""
    import uvicorn

    from .service import create_app

    if data_dir is None:
        data_dir = Path(os.environ.get("IMTKIT_DATA_DIR", "imtkit_data"))
    app = create_app(model_dir, data_dir, frontend_dist)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
