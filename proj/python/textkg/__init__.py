"""Two-stream knowledge-augmented video captioning toolkit.

The heavy lifting lives in the compiled ``textkg._textkg`` extension; this
package re-exports its public surface.
"""

from textkg._textkg import (  # noqa: F401
    EmbeddingTable,
    bleu4,
    build_kg,
    caption,
    cider,
    cosine_similarity,
    embed_word,
    evaluate,
    fuse_and_argmax,
    gen_synthetic,
    grad_check,
    hashed_table,
    load_word_vectors,
    lr_at,
    metric_tokens,
    rank_knowledge,
    rep4,
    rouge_l,
    sentence_embedding,
    train,
)

__all__ = [
    "EmbeddingTable",
    "bleu4",
    "build_kg",
    "caption",
    "cider",
    "cosine_similarity",
    "embed_word",
    "evaluate",
    "fuse_and_argmax",
    "gen_synthetic",
    "grad_check",
    "hashed_table",
    "load_word_vectors",
    "lr_at",
    "metric_tokens",
    "rank_knowledge",
    "rep4",
    "rouge_l",
    "sentence_embedding",
    "train",
]
