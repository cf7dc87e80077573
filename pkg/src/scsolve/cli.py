"""Command-line pipeline: gen-data, build-vocab, pretrain, finetune, solve, eval, pr-sweep.

Exit codes: 0 success, 2 missing or incompatible artifacts, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import evalkit, syngen
from .qdata import Category, QuestionError, expand, read_questions, write_questions
from .seq2seq import ModelConfig, Seq2Seq
from .solver import ModelScorer, decide, solve_many, write_decisions
from .tensorcore import NumericError
from .tokenizer import Vocab, build_vocab
from .training import TrainConfig, TrainingError, finetune, make_finetune_dataset, pretrain

log = logging.getLogger("scsolve")


class ArtifactError(RuntimeError):
    """Missing or mutually incompatible input artifacts (exit code 2)."""


@dataclass
class RunConfig:
    seed: int = 0
    precision: str = "f32"
    # data
    m: int = 4
    count_c1: int = 600
    count_c2: int = 600
    count_c3: int = 600
    count_c4: int = 600
    test_fraction: float = 1 / 6
    corpus_size: int = 6000
    min_freq: int = 1
    # model
    d: int = 64
    enc_layers: int = 2
    dec_layers: int = 2
    heads: int = 4
    ffn: int = 128
    head_hidden: int = 0  # 0 means 4*d
    max_len: int = 48
    # training
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 32
    pretrain_epochs: int = 6
    finetune_epochs: int = 8
    mask_rate: float = 0.15
    positive_weight: bool = False
    # solving / evaluation
    threshold: float = 0.0
    grid_step: float = 0.01

    def gen_config(self) -> syngen.GenConfig:
        counts = {Category.C1: self.count_c1, Category.C2: self.count_c2,
                  Category.C3: self.count_c3, Category.C4: self.count_c4}
        return syngen.GenConfig(counts, self.m, self.seed, self.test_fraction, self.corpus_size)

    def model_config(self, vocab_size: int) -> ModelConfig:
        return ModelConfig(self.d, self.enc_layers, self.dec_layers, self.heads, self.ffn,
                           self.head_hidden or None, vocab_size, self.max_len, self.seed, self.precision)

    def train_config(self, epochs: int) -> TrainConfig:
        return TrainConfig(self.lr, self.beta1, self.beta2, self.adam_eps, self.batch_size, epochs,
                           None, self.mask_rate, self.seed, self.precision, self.positive_weight)

    def digest(self) -> str:
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def _coerce(field: dataclasses.Field, raw: str):
    kind = field.type if isinstance(field.type, str) else field.type.__name__
    if kind == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{field.name}: expected a boolean, got {raw!r}")
    return {"int": int, "float": float, "str": str}[kind](raw)


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def make_run_config(values: dict[str, str] | None = None, **overrides) -> RunConfig:
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    kwargs = {}
    for key, raw in (values or {}).items():
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        kwargs[key] = _coerce(fields[key], raw)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**kwargs)


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path: Path, command: str, cfg: RunConfig, inputs: list, outputs: list) -> None:
    record = {
        "command": command,
        "config_sha256": cfg.digest(),
        "config": dataclasses.asdict(cfg),
        "inputs": {Path(p).name: sha256_file(p) for p in inputs},
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest_path(out: Path) -> Path:
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


def _require(path, what: str) -> Path:
    if path is None:
        raise ArtifactError(f"missing --{what}")
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"{what} file not found: {path}")
    return path


def load_vocab(path) -> Vocab:
    try:
        return Vocab.load(_require(path, "vocab"))
    except (ValueError, OSError) as exc:
        raise ArtifactError(str(exc)) from None


def load_model(path, vocab: Vocab) -> Seq2Seq:
    try:
        model = Seq2Seq.load(_require(path, "weights"))
    except (ValueError, KeyError, OSError) as exc:
        raise ArtifactError(f"cannot read weights: {exc}") from None
    if model.config.vocab_size != vocab.size:
        raise ArtifactError(f"vocab size {vocab.size} does not match weight file V={model.config.vocab_size}")
    return model


def load_questions(path):
    try:
        return read_questions(_require(path, "data"))
    except QuestionError as exc:
        raise ArtifactError(f"{path}: {exc}") from None


def vocab_texts(paths) -> list[str]:
    texts: list[str] = []
    for p in paths:
        p = _require(p, "data")
        if p.suffix == ".jsonl":
            for q in load_questions(p):
                texts += [c.sentence for c in expand(q, strict=False)]
        else:
            texts += [line.rstrip("\n") for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]
    return texts


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_data(cfg: RunConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    gen = cfg.gen_config()
    train, test = syngen.generate(gen)
    files = {"train": out / "train.jsonl", "test": out / "test.jsonl", "corpus": out / "corpus.txt"}
    write_questions(files["train"], train)
    write_questions(files["test"], test)
    sentences = syngen.corpus(gen, exclude={syngen.fill(q.stem, q.segments[q.answer_index]) for q in test})
    files["corpus"].write_text("".join(s + "\n" for s in sentences), encoding="utf-8")
    syngen.write_manifest(out / "syngen_manifest.json", gen,
                          {k: sha256_file(v) for k, v in files.items()})
    log.info("wrote %d train / %d test questions and %d corpus sentences to %s",
             len(train), len(test), len(sentences), out)
    return list(files.values()) + [out / "syngen_manifest.json"]


def cmd_build_vocab(cfg: RunConfig, data: list, out: Path) -> Vocab:
    vocab = build_vocab(vocab_texts(data), cfg.min_freq)
    vocab.save(out)
    log.info("vocabulary of %d entries written to %s", vocab.size, out)
    return vocab


def cmd_pretrain(cfg: RunConfig, data, vocab_path, out: Path, init=None) -> Seq2Seq:
    vocab = load_vocab(vocab_path)
    sentences = [s for s in _require(data, "data").read_text(encoding="utf-8").splitlines() if s.strip()]
    model = load_model(init, vocab) if init else Seq2Seq(cfg.model_config(vocab.size))
    train_log = pretrain(model, sentences, vocab, cfg.train_config(cfg.pretrain_epochs), log_every=100)
    model.save(out)
    train_log.write(out.with_name(out.name + ".log"))
    return model


def cmd_finetune(cfg: RunConfig, data, vocab_path, weights, out: Path) -> Seq2Seq:
    vocab = load_vocab(vocab_path)
    model = load_model(weights, vocab)
    questions = load_questions(data)
    examples, skipped = make_finetune_dataset(questions, vocab, model.config.max_len, cfg.positive_weight)
    if skipped:
        log.warning("skipped %d question(s) while building the fine-tuning set", skipped)
    train_log = finetune(model, examples, cfg.train_config(cfg.finetune_epochs), log_every=100)
    model.save(out)
    train_log.write(out.with_name(out.name + ".log"))
    return model


def _scorer(vocab_path, weights) -> ModelScorer:
    vocab = load_vocab(vocab_path)
    return ModelScorer(load_model(weights, vocab), vocab)


def cmd_solve(cfg: RunConfig, data, vocab_path, weights, out: Path) -> list:
    scorer = _scorer(vocab_path, weights)
    questions = [q for q in load_questions(data) if len(q.mismatched) < q.m]
    decisions = [decide(p, cfg.threshold) for p in solve_many(scorer, questions)]
    write_decisions(out, questions, decisions)
    answered = sum(d.answered for d in decisions)
    log.info("answered %d of %d question(s) at threshold %.2f", answered, len(decisions), cfg.threshold)
    return decisions


def cmd_eval(cfg: RunConfig, data, vocab_path, weights, out: Path) -> evalkit.EvalReport:
    scorer = _scorer(vocab_path, weights)
    questions = load_questions(data)
    report = evalkit.evaluate(scorer, questions, split=Path(data).stem)
    out.write_text("".join(r + "\n" for r in report.records()), encoding="utf-8")
    print(report.table())
    return report


def cmd_pr_sweep(cfg: RunConfig, data, vocab_path, weights, out: Path) -> evalkit.PrCurve:
    scorer = _scorer(vocab_path, weights)
    curve = evalkit.pr_sweep(scorer, load_questions(data), evalkit.default_grid(cfg.grid_step))
    out.write_text("".join(r + "\n" for r in curve.records()), encoding="utf-8")
    for p in curve.points:
        if round(p.threshold * 100) % 5 == 0:
            prec = "-" if p.precision is None else f"{p.precision:.4f}"
            print(f"tau={p.threshold:.2f} precision={prec} recall={p.recall:.4f}")
    return curve


def run_pipeline(cfg: RunConfig, out: Path) -> evalkit.EvalReport:
    """All stages in order, each leaving its artifact and manifest in ``out``."""
    data_dir = out / "data"
    outputs = cmd_gen_data(cfg, data_dir)
    write_manifest(_manifest_path(data_dir), "gen-data", cfg, [], outputs)
    train, test, corpus_txt = data_dir / "train.jsonl", data_dir / "test.jsonl", data_dir / "corpus.txt"
    vocab = out / "vocab.txt"
    cmd_build_vocab(cfg, [corpus_txt, train], vocab)
    write_manifest(_manifest_path(vocab), "build-vocab", cfg, [corpus_txt, train], [vocab])
    pre = out / "pretrained.bin"
    cmd_pretrain(cfg, corpus_txt, vocab, pre)
    write_manifest(_manifest_path(pre), "pretrain", cfg, [corpus_txt, vocab], [pre])
    ft = out / "finetuned.bin"
    cmd_finetune(cfg, train, vocab, pre, ft)
    write_manifest(_manifest_path(ft), "finetune", cfg, [train, vocab, pre], [ft])
    report_path = out / "eval.tsv"
    report = cmd_eval(cfg, test, vocab, ft, report_path)
    write_manifest(_manifest_path(report_path), "eval", cfg, [test, vocab, ft], [report_path])
    curve_path = out / "pr_curve.tsv"
    cmd_pr_sweep(cfg, test, vocab, ft, curve_path)
    write_manifest(_manifest_path(curve_path), "pr-sweep", cfg, [test, vocab, ft], [curve_path])
    return report


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--precision", choices=["f32", "f64"])
    common.add_argument("--out", required=True)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="scsolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="generate synthetic train/test questions and a corpus")
    p = sub.add_parser("build-vocab", parents=[common], help="build a word vocabulary")
    p.add_argument("--data", action="append", required=True, help="question .jsonl or corpus .txt (repeatable)")
    p.add_argument("--min-freq", type=int)
    p = sub.add_parser("pretrain", parents=[common], help="masked-token denoising pretraining")
    p.add_argument("--data", required=True, help="corpus, one sentence per line")
    p.add_argument("--vocab", required=True)
    p.add_argument("--weights", help="optional starting weights")
    p = sub.add_parser("finetune", parents=[common], help="train the right/wrong option head")
    p.add_argument("--data", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--weights", required=True)
    for name, helptext in (("solve", "answer questions, abstaining below --threshold"),
                           ("eval", "per-category accuracy"),
                           ("pr-sweep", "precision/recall over a threshold grid")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--data", required=True)
        p.add_argument("--vocab", required=True)
        p.add_argument("--weights", required=True)
        if name == "solve":
            p.add_argument("--threshold", type=float)
        if name == "pr-sweep":
            p.add_argument("--grid-step", type=float)
    sub.add_parser("pipeline", parents=[common], help="run every stage into one directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        values = read_config_file(_require(args.config, "config")) if args.config else {}
        cfg = make_run_config(values, seed=args.seed, precision=args.precision,
                              min_freq=getattr(args, "min_freq", None),
                              threshold=getattr(args, "threshold", None),
                              grid_step=getattr(args, "grid_step", None))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    inputs = [Path(p) for p in ([args.config] if args.config else [])]
    try:
        if args.command == "gen-data":
            outputs = cmd_gen_data(cfg, out)
        elif args.command == "pipeline":
            report = run_pipeline(cfg, out)
            print(f"overall accuracy {report.accuracy:.4f}")
            return 0
        else:
            out.parent.mkdir(parents=True, exist_ok=True)
            data = args.data
            inputs += [Path(p) for p in (data if isinstance(data, list) else [data])]
            for extra in ("vocab", "weights"):
                if getattr(args, extra, None):
                    inputs.append(Path(getattr(args, extra)))
            if args.command == "build-vocab":
                cmd_build_vocab(cfg, data, out)
            elif args.command == "pretrain":
                cmd_pretrain(cfg, data, args.vocab, out, args.weights)
            elif args.command == "finetune":
                cmd_finetune(cfg, data, args.vocab, args.weights, out)
            elif args.command == "solve":
                cmd_solve(cfg, data, args.vocab, args.weights, out)
            elif args.command == "eval":
                cmd_eval(cfg, data, args.vocab, args.weights, out)
            elif args.command == "pr-sweep":
                cmd_pr_sweep(cfg, data, args.vocab, args.weights, out)
            outputs = [out]
        write_manifest(_manifest_path(out), args.command, cfg, [p for p in inputs if p.exists()], outputs)
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, TrainingError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
