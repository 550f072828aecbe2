"""Reading dependency-parsed source sentences and their aligned translations.

Source sentences come as CoNLL-U; each target language is a plain text file
with one sentence per line, aligned with the source by line order.
"""

from __future__ import annotations

import io
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import yaml

from .errors import AlignmentError, ConlluParseError, CorpusEncodingError, ValidationError

ROOT = None  # head_index of a token attached to the artificial root


@dataclass(frozen=True)
class Token:
    surface_form: str
    lemma: str
    head_index: int | None  # 0-based, ROOT (None) for the root
    relation: str


@dataclass(frozen=True)
class SentenceRecord:
    id: str
    source_tokens: tuple[Token, ...]
    source_text: str
    target_texts: dict[str, str] = field(default_factory=dict, compare=False)

    @property
    def word_count(self) -> int:
        # whitespace words of the untokenised text; punctuation sticks to its word
        return len(self.source_text.split())


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[SentenceRecord, ...]
    language_codes: frozenset[str] = frozenset()

    def __len__(self):
        return len(self.sentences)

    def __iter__(self) -> Iterator[SentenceRecord]:
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    @classmethod
    def from_sentences(cls, sentences: Iterable[SentenceRecord]) -> "Corpus":
        sentences = tuple(sentences)
        langs = frozenset(k for s in sentences for k in s.target_texts)
        return cls(sentences, langs)


def _decode_lines(stream) -> Iterator[str]:
    """Yield text lines from a text or binary stream, decoding strictly as UTF-8."""
    for number, line in enumerate(stream, 1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise CorpusEncodingError(f"invalid UTF-8: {exc.reason}", number) from None
        yield line


def _build_sentence(block, comments, ordinal, path) -> SentenceRecord:
    sent_id = None
    text = None
    targets = {}
    for number, line in comments:
        body = line[1:].strip()
        key, sep, value = body.partition("=")
        if not sep:
            continue
        key = key.strip()
        value = value.strip()
        if key == "sent_id":
            sent_id = value
        elif key == "text":
            text = value
        elif key.startswith("text_"):
            targets[key[len("text_"):]] = value

    rows = []
    ranges = {}
    for number, line in block:
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluParseError(
                f"expected 10 tab-separated columns, found {len(cols)}: {line!r}", number, path
            )
        tid = cols[0]
        if "." in tid:
            continue  # empty node
        if "-" in tid:
            start, _, end = tid.partition("-")
            try:
                ranges[int(start)] = (int(end), cols[1])
            except ValueError:
                raise ConlluParseError(f"bad multiword token id {tid!r}", number, path) from None
            continue
        rows.append((number, cols))

    n = len(rows)
    tokens = []
    for position, (number, cols) in enumerate(rows):
        try:
            tid = int(cols[0])
            head = int(cols[6])
        except ValueError:
            raise ConlluParseError("token id and head must be integers", number, path) from None
        if tid != position + 1:
            raise ConlluParseError(f"token id {tid} out of sequence", number, path)
        if head < 0 or head > n:
            raise ConlluParseError(f"head {head} out of range for {n} tokens", number, path)
        if head == tid:
            raise ConlluParseError(f"token {tid} is its own head", number, path)
        form, lemma, relation = cols[1], cols[2], cols[7]
        if lemma == "_" and form != "_":
            lemma = form
        if not lemma or not relation:
            raise ConlluParseError("empty lemma or relation", number, path)
        tokens.append(Token(form, lemma, None if head == 0 else head - 1, relation))

    if text is None:
        words = []
        skip_until = 0
        for position, token in enumerate(tokens, 1):
            if position <= skip_until:
                continue
            if position in ranges:
                skip_until, form = ranges[position]
                words.append(form)
            else:
                words.append(token.surface_form)
        text = " ".join(words)
    if sent_id is None:
        sent_id = f"{ordinal:08d}"
    return SentenceRecord(sent_id, tuple(tokens), text, targets)


def parse_conllu(stream: IO | Iterable, path=None, first_ordinal: int = 0) -> list[SentenceRecord]:
    """Parse CoNLL-U sentence blocks from a text or binary stream.

    Multiword-token ranges and empty nodes are dropped. Heads are converted to
    0-based indices, with ``None`` for ROOT. Blocks without a ``# sent_id``
    comment get zero-padded ordinal ids starting at ``first_ordinal``.
    """
    sentences = []
    block: list[tuple[int, str]] = []
    comments: list[tuple[int, str]] = []

    def flush():
        if block:
            ordinal = first_ordinal + len(sentences)
            sentences.append(_build_sentence(block, comments, ordinal, path))
        block.clear()
        comments.clear()

    try:
        for number, line in enumerate(_decode_lines(stream), 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                flush()
            elif line.startswith("#"):
                if block:
                    flush()
                comments.append((number, line))
            else:
                block.append((number, line))
        flush()
    except CorpusEncodingError as exc:
        if path is not None and exc.path is None:
            raise CorpusEncodingError(exc.message, exc.line_number, path) from None
        raise
    return sentences


def read_conllu(path, first_ordinal: int = 0) -> list[SentenceRecord]:
    with open(path, "rb") as f:
        return parse_conllu(f, path=str(path), first_ordinal=first_ordinal)


def format_conllu(sentences: Iterable[SentenceRecord]) -> str:
    """Serialise sentences back to CoNLL-U. Unused columns are written as ``_``."""
    out = io.StringIO()
    for sent in sentences:
        out.write(f"# sent_id = {sent.id}\n")
        out.write(f"# text = {sent.source_text}\n")
        for lang in sorted(sent.target_texts):
            out.write(f"# text_{lang} = {sent.target_texts[lang]}\n")
        for i, tok in enumerate(sent.source_tokens, 1):
            head = 0 if tok.head_index is None else tok.head_index + 1
            cols = [str(i), tok.surface_form, tok.lemma, "_", "_", "_", str(head), tok.relation, "_", "_"]
            out.write("\t".join(cols) + "\n")
        out.write("\n")
    return out.getvalue()


def preprocess(sentences: Sequence[SentenceRecord], max_words: int = 30, dedup: bool = True) -> Corpus:
    """Drop sentences longer than ``max_words`` words and, if ``dedup``, repeated source texts.

    The first occurrence of a duplicated source text is kept; order is preserved.
    """
    if max_words < 1:
        raise ValueError("max_words must be at least 1")
    if isinstance(sentences, Corpus):
        sentences = sentences.sentences
    seen = set()
    kept = []
    for sent in sentences:
        if sent.word_count > max_words:
            continue
        if dedup:
            if sent.source_text in seen:
                continue
            seen.add(sent.source_text)
        kept.append(sent)
    return Corpus.from_sentences(kept)


def subsample(corpus: Corpus, n: int, seed: int) -> Corpus:
    """Draw ``min(n, len(corpus))`` sentences uniformly without replacement.

    The draw uses Python's Mersenne Twister seeded with ``seed``; selected
    sentences keep their corpus order.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n >= len(corpus):
        return corpus
    rng = random.Random(seed)
    chosen = sorted(rng.sample(range(len(corpus)), n))
    return Corpus(tuple(corpus.sentences[i] for i in chosen), corpus.language_codes)


def align_targets(corpus: Corpus, language: str, stream: IO | Iterable[str]) -> Corpus:
    lines = [line.rstrip("\r\n") for line in _decode_lines(stream)]
    if len(lines) != len(corpus):
        raise AlignmentError(len(corpus), len(lines), language)
    sentences = tuple(
        replace(sent, target_texts={**sent.target_texts, language: line})
        for sent, line in zip(corpus.sentences, lines)
    )
    return Corpus(sentences, corpus.language_codes | {language})


@dataclass
class Manifest:
    """Pairs of (CoNLL-U source file, {language: target file}).

    YAML layout::

        sources:
          - conllu: europarl.en.conllu
            targets: {de: europarl.de.txt, fi: europarl.fi.txt}
    """

    entries: list[tuple[Path, dict[str, Path]]]

    @property
    def languages(self) -> list[str]:
        langs = set()
        for _, targets in self.entries:
            langs.update(targets)
        return sorted(langs)

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        return cls.from_dict(data, base=path.parent)

    @classmethod
    def from_dict(cls, data: dict, base=Path(".")) -> "Manifest":
        base = Path(base)
        raw = data.get("sources") or []
        if not raw:
            raise ValidationError("manifest lists no source files")
        entries = []
        for item in raw:
            if "conllu" not in item:
                raise ValidationError(f"manifest entry without 'conllu' key: {item!r}")
            src = base / item["conllu"]
            targets = {lang: base / p for lang, p in (item.get("targets") or {}).items()}
            for p in [src, *targets.values()]:
                if not p.exists():
                    raise ValidationError(f"file listed in manifest does not exist: {p}")
            entries.append((src, targets))
        langs = [frozenset(t) for _, t in entries]
        if len(set(langs)) > 1:
            raise ValidationError("all manifest entries must list the same target languages")
        return cls(entries)


def load_manifest_corpus(manifest: Manifest) -> list[SentenceRecord]:
    """Read every source file of the manifest and attach its target texts."""
    sentences = []
    for src, targets in manifest.entries:
        part = Corpus.from_sentences(read_conllu(src, first_ordinal=len(sentences)))
        for lang, tpath in sorted(targets.items()):
            with open(tpath, "rb") as f:
                try:
                    part = align_targets(part, lang, f)
                except AlignmentError as exc:
                    raise AlignmentError(exc.expected, exc.got, f"{lang} ({tpath})") from None
                except CorpusEncodingError as exc:
                    raise CorpusEncodingError(exc.message, exc.line_number, str(tpath)) from None
        sentences.extend(part.sentences)
    return sentences
