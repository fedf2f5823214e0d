"""
Text Evaluations

Tests tokenization, embeddings, prompt concatenation and substring spans
against the bundled and small hand-built vocabularies.
"""

import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from cacgen.errors import ContractViolation, VocabularyError
from cacgen.services import get_vocabulary
from cacgen.text import (
    COMPOSITION_TEMPLATE,
    build_vocabulary,
    concat_prompts,
    embed,
    embed_tokens,
    find_substring_span,
    load_vocabulary,
    pseudo_caption,
    tokenize,
)


def _table_vocab():
    return build_vocabulary(
        ["a", "photo", "of", "dining", "table", "unicorn"], {"table": (0.0, 0.5, 1.0)}, embed_dim=12, seed=3
    )


def test_tokenize_examples():
    """BOS/EOS wrapping, case folding and the empty prompt"""
    vocab = get_vocabulary()
    prompt = tokenize("a dog", vocab)
    assert prompt.tokens == (vocab.bos_id, vocab.token_id("a"), vocab.token_id("dog"), vocab.eos_id)
    assert prompt.length == 4, f"expected n=4, got {prompt.length}"

    assert tokenize("Red CAT", vocab).tokens == tokenize("red cat", vocab).tokens, "tokenizer must fold case"

    with pytest.raises(ContractViolation):
        tokenize("", vocab)
    with pytest.raises(VocabularyError) as err:
        tokenize("a unicorn", vocab)
    assert "unicorn" in str(err.value), "unknown-word error should name the word"

    print("✅ tokenize examples hold")


def test_templates_tokenize():
    """Prompt templates survive punctuation stripping"""
    vocab = get_vocabulary()
    caption = COMPOSITION_TEMPLATE.format(color1="red", object1="cat", color2="blue", object2="car")
    assert tokenize(caption, vocab).length == 9, "composition caption should hold 7 words"

    text = pseudo_caption("a photo of a room", ["a cat", "a dog"])
    assert text == "a photo of a room with a cat, a dog", f"unexpected pseudo caption: {text}"
    assert tokenize(text, vocab).length == 2 + 10, "comma must be stripped from 'cat,'"
    assert pseudo_caption("a photo", []) == "a photo", "no regions should keep the caption"

    print("✅ templates tokenize")


def test_embedding_determinism_and_locality():
    """Same tokens give the same rows; PAD embeds to zeros"""
    vocab = get_vocabulary()
    a = embed(tokenize("a dog", vocab), vocab)
    b = embed(tokenize("a dog", vocab), vocab)
    c = embed(tokenize("a cat", vocab), vocab)
    assert a.shape == (4, vocab.embed_dim), f"unexpected embedding shape {a.shape}"
    assert np.array_equal(a, b), "embedding must be deterministic"
    differing = [i for i in range(4) if not np.array_equal(a[i], c[i])]
    assert differing == [2], f"only the changed token row should differ, got {differing}"

    pad = embed_tokens([vocab.pad_id, vocab.token_id("cat")], vocab)
    assert np.array_equal(pad[0], np.zeros(vocab.embed_dim)), "PAD must embed to a zero row"
    assert pad[1, -4] == 1.0, "concept tokens carry presence 1 in the paint coordinates"

    print("✅ embeddings are deterministic and local")


def test_concat_prompts_examples():
    """Concatenation keeps every BOS/EOS and weights region content"""
    vocab = get_vocabulary()
    caption = tokenize("a dog", vocab)
    region = tokenize("cat", vocab)
    prompt = concat_prompts(caption, [region], vocab=vocab)
    assert prompt.tokens == caption.tokens + region.tokens, "tokens should be y0 followed by y1"
    assert prompt.segments == ((0, 4), (4, 7)), f"unexpected segments {prompt.segments}"
    assert prompt.lambdas.tolist() == [1, 1, 1, 1, 1, 10, 1], f"unexpected lambdas {prompt.lambdas}"
    assert prompt.region_content_columns(1) == (5,), "only 'cat' is region content"

    alone = concat_prompts(caption, [], vocab=vocab)
    assert alone.tokens == caption.tokens and alone.segments == ((0, 4),), "m=0 should be the caption"

    specials = concat_prompts(caption, [region], vocab=vocab, lambda_region_specials=True)
    assert specials.lambdas.tolist() == [1, 1, 1, 1, 10, 10, 10], "region BOS/EOS should take lambda_region"

    padded = concat_prompts(caption, [region], pad_to=9, vocab=vocab)
    assert padded.padded_length == 9 and padded.tokens[-2:] == (vocab.pad_id, vocab.pad_id)
    assert padded.token_weights()[-2:].tolist() == [0.0, 0.0], "PAD columns weigh 0"

    with pytest.raises(ContractViolation):
        concat_prompts(caption, [region], pad_to=6, vocab=vocab)

    print("✅ concat_prompts examples hold")


def test_find_substring_span_examples():
    """First occurrence, absence and full-content spans"""
    vocab = _table_vocab()
    caption = tokenize("a photo of a dining table", vocab)
    assert find_substring_span(caption, tokenize("dining table", vocab)) == (5, 2), "span should cover tokens 5-6"
    assert find_substring_span(caption, tokenize("unicorn", vocab)) is None, "absent region should give None"
    assert find_substring_span(caption, tokenize("a photo of a dining table", vocab)) == (1, 6)
    assert find_substring_span(caption, tokenize("a", vocab)) == (1, 1), "first occurrence wins"

    print("✅ find_substring_span examples hold")


def test_vocabulary_file_validation():
    """Schema violations and missing files raise VocabularyError"""
    with tempfile.TemporaryDirectory() as tmp:
        bad = Path(tmp) / "bad.json"
        bad.write_text(json.dumps({"tokens": ["a"], "concepts": {"red": [1.5, 0, 0]}}))
        with pytest.raises(VocabularyError):
            load_vocabulary(bad)
        with pytest.raises(VocabularyError):
            load_vocabulary(Path(tmp) / "missing.json")

        good = Path(tmp) / "good.json"
        good.write_text(json.dumps({"tokens": ["a", "big"], "concepts": {"cat": [1, 0.5, 0]}, "embed_dim": 10}))
        vocab = load_vocabulary(good)
        assert "cat" in vocab and vocab.embed_dim == 10, "palette concepts join the token table"
        assert vocab.object_palette() == {"cat": (1.0, 0.5, 0.0)}

    print("✅ vocabulary files are validated")


def test_compound_palette():
    """Compound colors are the mean of attribute and object colors"""
    vocab = get_vocabulary()
    palette = vocab.compound_palette([("red", "car")])
    assert palette == {"red car": (0.5, 0.0, 0.25)}, f"unexpected compound {palette}"
    with pytest.raises(VocabularyError):
        vocab.compound_palette([("red", "photo")])

    print("✅ compound palette is the color mean")


def run_all_text_tests():
    """Run all text tests"""
    print("Running Text Evaluations...")
    print("=" * 50)

    test_tokenize_examples()
    test_templates_tokenize()
    test_embedding_determinism_and_locality()
    test_concat_prompts_examples()
    test_find_substring_span_examples()
    test_vocabulary_file_validation()
    test_compound_palette()

    print("=" * 50)
    print("✅ All text evaluations passed!")


if __name__ == "__main__":
    run_all_text_tests()
