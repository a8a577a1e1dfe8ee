"""Generate a larger synthetic corpus with decode fixtures.

Usage:
  python tools/make_synthetic_corpus.py --out-dir data/generated --speakers 12 --utts 4 --seed 0
  python -m paraphasia eval --config data/generated/decode.conf
"""
import argparse
from pathlib import Path

from paraphasia.corpus.manifest import write_manifest, write_predictions
from paraphasia.corpus.synthetic import (
    synthetic_corpus,
    synthetic_predictions,
    synthetic_sentences,
    write_decode_fixtures,
)
from paraphasia.logging_config import setup_logging

DECODE_CONF = """\
manifest = manifest.jsonl
mode = decode
grids_dir = grids
scorer_dir = scorers
output_dir = reports
folds = protocol
ctc_weights = 0.2, 0.3, 0.4
windows = 0, 1, 2
seed = {seed}
"""


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--speakers", type=int, default=12)
    parser.add_argument("--utts", type=int, default=4, help="Utterances per speaker")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sentences", type=int, default=600, help="Tokenizer training sentences")
    args = parser.parse_args()
    setup_logging()

    out = Path(args.out_dir)
    manifest = synthetic_corpus(args.speakers, args.utts, seed=args.seed)
    write_manifest(manifest, out / "manifest.jsonl")
    write_predictions(synthetic_predictions(manifest, seed=args.seed), out / "predictions.jsonl")
    write_decode_fixtures(manifest, out / "grids", out / "scorers", seed=args.seed)
    (out / "sentences.txt").write_text("\n".join(synthetic_sentences(args.sentences, seed=args.seed)) + "\n",
                                       encoding="utf-8")
    (out / "decode.conf").write_text(DECODE_CONF.format(seed=args.seed), encoding="utf-8")
    print(f"{len(manifest.utterances)} utterances, {len(manifest.speakers)} speakers -> {out}")


if __name__ == "__main__":
    main()
