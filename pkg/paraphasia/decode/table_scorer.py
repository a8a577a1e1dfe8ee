"""Explicit prefix → distribution tables, used for fixtures and offline model dumps.

File format (UTF-8 text, ``#`` comments allowed)::

    V=<vocab size> eos=<id or none>
    <prefix ids | - | *>\t<V token log-probs>\t<2 paraphasia log-probs>

``-`` denotes the empty prefix and ``*`` the fallback used for prefixes
without their own record; ids and values are space-separated.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

from paraphasia.decode.scorer_base import PrefixScorer
from paraphasia.errors import InvalidDistribution, MalformedAnnotation, UnknownPrefix
from paraphasia.scoring.losses import StepDistributions

LOG = logging.getLogger(__name__)

_EMPTY_PREFIX = "-"
_DEFAULT_PREFIX = "*"


class TableScorer(PrefixScorer):
    """Scorer backed by an explicit table; the encoder handle is ignored."""

    def __init__(
        self,
        table: Mapping[Tuple[int, ...], StepDistributions],
        vocab_size: int,
        eos_id: Optional[int] = None,
        default: Optional[StepDistributions] = None,
    ):
        if vocab_size < 2:
            raise InvalidDistribution("a scorer needs at least two tokens")
        entries = list(table.items()) + ([(_DEFAULT_PREFIX, default)] if default is not None else [])
        for prefix, dist in entries:
            if dist.token_logp.size != vocab_size:
                raise InvalidDistribution(
                    f"prefix {prefix}: {dist.token_logp.size} token scores, expected {vocab_size}"
                )
        if eos_id is not None and not 0 < eos_id < vocab_size:
            raise InvalidDistribution(f"eos id {eos_id} must be a non-blank token id")
        self._table: Dict[Tuple[int, ...], StepDistributions] = dict(table)
        self.vocab_size = vocab_size
        self.eos_id = eos_id
        self.default = default

    def score(self, handle: Any, prefix: Sequence[int]) -> StepDistributions:
        key = tuple(prefix)
        dist = self._table.get(key, self.default)
        if dist is None:
            raise UnknownPrefix(f"no scorer entry for prefix {list(key)}")
        return dist

    def prefixes(self):
        return sorted(self._table)


def _format_values(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def write_table_scorer(scorer: TableScorer, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    eos = "none" if scorer.eos_id is None else str(scorer.eos_id)
    lines = [f"V={scorer.vocab_size} eos={eos}"]
    records = [(" ".join(map(str, p)) or _EMPTY_PREFIX, scorer.score(None, p)) for p in scorer.prefixes()]
    if scorer.default is not None:
        records.append((_DEFAULT_PREFIX, scorer.default))
    for key, dist in records:
        lines.append(f"{key}\t{_format_values(dist.token_logp)}\t{_format_values(dist.para_logp)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_table_scorer(path: Union[str, Path]) -> TableScorer:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise MalformedAnnotation(f"{path}: empty scorer file")
    try:
        header = dict(item.split("=", 1) for item in lines[0].split())
        vocab_size = int(header["V"])
        eos_id = None if header.get("eos", "none") == "none" else int(header["eos"])
    except (KeyError, ValueError):
        raise MalformedAnnotation(f"{path}: header must be 'V=<n> eos=<id|none>'") from None

    table: Dict[Tuple[int, ...], StepDistributions] = {}
    default: Optional[StepDistributions] = None
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 3:
            raise MalformedAnnotation(f"{path}:{lineno}: expected 'prefix<TAB>token logps<TAB>para logps'")
        key, token_part, para_part = fields
        try:
            key = key.strip()
            prefix = () if key in (_EMPTY_PREFIX, _DEFAULT_PREFIX) else tuple(int(x) for x in key.split())
            dist = StepDistributions(
                [float(v) for v in token_part.split()],
                [float(v) for v in para_part.split()],
            )
        except ValueError as exc:
            raise MalformedAnnotation(f"{path}:{lineno}: {exc}") from None
        if key == _DEFAULT_PREFIX:
            default = dist
        else:
            table[prefix] = dist
    LOG.debug("Loaded table scorer with %d prefixes from %s", len(table), path)
    return TableScorer(table, vocab_size, eos_id, default)


__all__ = ["TableScorer", "read_table_scorer", "write_table_scorer"]
