"""Config discovery: explicit path > ``$MIGR_CONFIG_DIR/<file>`` > built-in default."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from .classifier import Lexicon, load_lexicon
from .databuild import FauEmotionTable, load_fau_table
from .taxonomy import BUILTIN_TAXONOMIES, Taxonomy, load_taxonomy
from .trace import DEFAULT_TOKENS, TokenConfig, load_tokens

ENV_DIR = "MIGR_CONFIG_DIR"
FILENAMES = {"taxonomy": "taxonomy.json", "tokens": "tokens.json", "lexicon": "lexicon.json",
             "fau_table": "fau_table.json"}


def discover(kind: str, explicit: str | None) -> str | None:
    if explicit:
        return explicit
    root = os.environ.get(ENV_DIR)
    if root:
        candidate = Path(root) / FILENAMES[kind]
        if candidate.is_file():
            return str(candidate)
    return None


@dataclass
class GlobalConfig:
    taxonomy: Taxonomy
    tokens: TokenConfig
    lexicon: Lexicon
    fau_table: FauEmotionTable | None = None

    @classmethod
    def load(cls, taxonomy: str | None = None, tokens: str | None = None, lexicon: str | None = None,
             fau_table: str | None = None, need_fau: bool = False) -> "GlobalConfig":
        """Load and cross-validate configs; lexicon and FAU labels must belong to the taxonomy."""
        tax_src = discover("taxonomy", taxonomy) or "dfew"
        tax = load_taxonomy(tax_src)
        tok_src = discover("tokens", tokens)
        tok = load_tokens(tok_src) if tok_src else DEFAULT_TOKENS
        lex = load_lexicon(discover("lexicon", lexicon), tax)
        fau = load_fau_table(discover("fau_table", fau_table), tax) if need_fau else None
        return cls(tax, tok, lex, fau)


__all__ = ["GlobalConfig", "discover", "ENV_DIR", "FILENAMES", "BUILTIN_TAXONOMIES"]
