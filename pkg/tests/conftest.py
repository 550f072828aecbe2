import pytest

from dbcasplit.atoms import FilterPolicy, build_inventories
from dbcasplit.cache import VectorizedCorpus
from dbcasplit.corpus import SentenceRecord, Token
from dbcasplit.synthetic import generate_corpus


def make_sentence(sid, words, heads, relations, text=None):
    """Sentence from parallel lists; heads are 0-based indices or None for ROOT."""
    tokens = tuple(Token(w, w.lower(), h, r) for w, h, r in zip(words, heads, relations))
    return SentenceRecord(sid, tokens, text if text is not None else " ".join(words))


def edge_sentence(sid, head, rel, dep):
    """Two-token sentence holding the single edge head -rel-> dep."""
    return make_sentence(sid, [head, dep], [None, 0], ["root", rel], text=f"{head} {dep} {sid}")


OUR_VIGILANCE = make_sentence(
    "t1",
    ["Our", "vigilance", "is", "not", "partisan", "."],
    [1, 4, 4, 4, None, 4],
    ["poss", "nsubj", "cop", "advmod", "root", "punct"],
)

WURTZ = make_sentence(
    "t2",
    ["We", "shall", "now", "hear", "Mr", "Wurtz", "speaking", "against", "this", "request", "."],
    [3, 3, 3, None, 5, 6, 3, 9, 9, 6, 3],
    ["nsubj", "aux", "advmod", "root", "compound", "nsubj", "ccomp", "case", "det", "obl", "punct"],
)
# lemmatised forms for the second example
WURTZ = SentenceRecord(
    WURTZ.id,
    tuple(
        Token(t.surface_form, lemma, t.head_index, t.relation)
        for t, lemma in zip(
            WURTZ.source_tokens,
            ["we", "shall", "now", "hear", "mr", "wurtz", "speak", "against", "this", "request", "."],
        )
    ),
    WURTZ.source_text,
)

DESK_POLICY = FilterPolicy(top_k_excluded=2, min_count=3, weight_threshold=0.5)


def synthetic_cache(n=1000, seed=0, policy=DESK_POLICY, **kwargs) -> VectorizedCorpus:
    sentences = generate_corpus(n, seed=seed, **kwargs)
    return VectorizedCorpus.build(sentences, build_inventories(sentences, policy))


@pytest.fixture(scope="session")
def small_vc():
    return synthetic_cache(400, seed=0)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str):
    """Remember one acceptance verdict and print it; the summary hook repeats it at the end."""
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}"
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
