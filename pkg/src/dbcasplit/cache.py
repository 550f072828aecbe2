"""Vectorised corpus: per-sentence atom, compound and lemma bags plus the texts.

On disk the cache is a directory::

    format.json          format name, version, sizes, languages, fingerprint
    atoms.indptr.npy     CSR row pointers of the atom bags (int64)
    atoms.ids.npy        atom ids (int64)
    atoms.counts.npy     counts (float64)
    compounds.*.npy      same layout for compound bags
    lemmas.*.npy         same layout for all-lemma bags (unfiltered, for statistics)
    word_counts.npy      source words per sentence (int64)
    ids.txt              sentence ids, one per line
    lemma_vocab.txt      lemma strings indexed by lemma id
    text.src.txt         source sentences, one per line
    text.<lang>.txt      target sentences per language, aligned with text.src.txt

Every file is written deterministically, so identical inputs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .atoms import Inventories, vectorize
from .corpus import SentenceRecord
from .divergence import BagMatrix
from .errors import ValidationError

FORMAT_NAME = "dbca-bag-cache"
FORMAT_VERSION = 1


@dataclass
class VectorizedCorpus:
    ids: list[str]
    atom_bags: BagMatrix
    compound_bags: BagMatrix
    lemma_bags: BagMatrix
    n_atoms: int
    n_compounds: int
    word_counts: np.ndarray
    lemma_vocab: list[str]
    source_texts: list[str]
    target_texts: dict[str, list[str]] = field(default_factory=dict)

    def __len__(self):
        return len(self.ids)

    @property
    def languages(self) -> list[str]:
        return sorted(self.target_texts)

    def index_of(self) -> dict[str, int]:
        return {sid: i for i, sid in enumerate(self.ids)}

    @classmethod
    def build(cls, sentences: Sequence[SentenceRecord], inventories: Inventories) -> "VectorizedCorpus":
        ids = [s.id for s in sentences]
        if len(set(ids)) != len(ids):
            dup = next(sid for sid, n in Counter(ids).items() if n > 1)
            raise ValidationError(f"duplicate sentence id {dup!r}")
        atom_bags, compound_bags, lemma_bags = [], [], []
        lemma_index: dict[str, int] = {}
        for sent in sentences:
            a, c = vectorize(sent, inventories.atoms, inventories.compounds)
            atom_bags.append(a)
            compound_bags.append(c)
            lemmas = Counter()
            for tok in sent.source_tokens:
                lemma = tok.lemma.lower()
                lemmas[lemma_index.setdefault(lemma, len(lemma_index))] += 1
            lemma_bags.append(lemmas)
        langs = sorted({lang for s in sentences for lang in s.target_texts})
        targets = {lang: [s.target_texts.get(lang, "") for s in sentences] for lang in langs}
        return cls(
            ids=ids,
            atom_bags=BagMatrix.from_bags(atom_bags),
            compound_bags=BagMatrix.from_bags(compound_bags),
            lemma_bags=BagMatrix.from_bags(lemma_bags),
            n_atoms=len(inventories.atoms),
            n_compounds=len(inventories.compounds),
            word_counts=np.array([s.word_count for s in sentences], dtype=np.int64),
            lemma_vocab=list(lemma_index),
            source_texts=[s.source_text for s in sentences],
            target_texts=targets,
        )

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for bags in (self.atom_bags, self.compound_bags, self.lemma_bags):
            for arr in (bags.indptr, bags.ids, bags.counts):
                h.update(np.ascontiguousarray(arr).tobytes())
        h.update(self.word_counts.astype(np.int64).tobytes())
        h.update("\n".join(self.ids).encode("utf-8"))
        h.update(f"{self.n_atoms}:{self.n_compounds}".encode())
        return h.hexdigest()[:16]

    def save(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for name, bags in (("atoms", self.atom_bags), ("compounds", self.compound_bags), ("lemmas", self.lemma_bags)):
            np.save(d / f"{name}.indptr.npy", bags.indptr)
            np.save(d / f"{name}.ids.npy", bags.ids)
            np.save(d / f"{name}.counts.npy", bags.counts)
        np.save(d / "word_counts.npy", self.word_counts.astype(np.int64))
        _write_lines(d / "ids.txt", self.ids)
        _write_lines(d / "lemma_vocab.txt", self.lemma_vocab)
        _write_lines(d / "text.src.txt", self.source_texts)
        for lang, lines in sorted(self.target_texts.items()):
            _write_lines(d / f"text.{lang}.txt", lines)
        meta = {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "n_sentences": len(self),
            "n_atoms": self.n_atoms,
            "n_compounds": self.n_compounds,
            "languages": self.languages,
            "fingerprint": self.fingerprint(),
        }
        with open(d / "format.json", "w", encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, directory) -> "VectorizedCorpus":
        d = Path(directory)
        meta_path = d / "format.json"
        if not meta_path.exists():
            raise ValidationError(f"no bag cache at {d} (format.json missing)")
        with open(meta_path, encoding="utf-8") as f:
            meta = json.load(f)
        if meta.get("format") != FORMAT_NAME:
            raise ValidationError(f"{meta_path}: not a {FORMAT_NAME} directory")
        if meta.get("version") != FORMAT_VERSION:
            raise ValidationError(f"{meta_path}: unsupported cache version {meta.get('version')}")

        def bags(name):
            return BagMatrix(
                np.load(d / f"{name}.indptr.npy"), np.load(d / f"{name}.ids.npy"), np.load(d / f"{name}.counts.npy")
            )

        vc = cls(
            ids=_read_lines(d / "ids.txt"),
            atom_bags=bags("atoms"),
            compound_bags=bags("compounds"),
            lemma_bags=bags("lemmas"),
            n_atoms=meta["n_atoms"],
            n_compounds=meta["n_compounds"],
            word_counts=np.load(d / "word_counts.npy"),
            lemma_vocab=_read_lines(d / "lemma_vocab.txt"),
            source_texts=_read_lines(d / "text.src.txt"),
            target_texts={lang: _read_lines(d / f"text.{lang}.txt") for lang in meta["languages"]},
        )
        if vc.fingerprint() != meta["fingerprint"]:
            raise ValidationError(f"{d}: cache contents do not match the recorded fingerprint")
        return vc


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line.replace("\n", " ") + "\n")


def _read_lines(path) -> list[str]:
    with open(path, encoding="utf-8", newline="\n") as f:
        return [line.rstrip("\n") for line in f]
