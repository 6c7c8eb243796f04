"""Syntactic math text: objects modulo equivalence, hole filling, binding and grammars."""
