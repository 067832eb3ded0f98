"""Benchmark problem records (the unit of work for the pipeline)."""

from __future__ import annotations

from dataclasses import dataclass

from .testcases import NLExample

DIFFICULTIES = ("Easy", "Medium", "Hard")
DATA_STRUCTURES = ("integer", "array", "string", "tree", "linked-list")


@dataclass(frozen=True)
class ProblemRecord:
    id: str
    title: str
    difficulty: str
    description: str
    signature: str
    examples: tuple  # NLExample
    data_structures: frozenset

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "difficulty": self.difficulty,
            "description": self.description,
            "signature": self.signature,
            "examples": [
                {"input": e.input_text, "output": e.output_text, **({"explanation": e.explanation} if e.explanation else {})}
                for e in self.examples
            ],
            "data_structures": [d for d in DATA_STRUCTURES if d in self.data_structures],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemRecord":
        """Unvalidated construction; ``bench.load_manifest`` does the checking."""
        return cls(
            str(d["id"]),
            d["title"],
            d["difficulty"],
            d["description"],
            d["signature"],
            tuple(NLExample(e["input"], e["output"], e.get("explanation")) for e in d["examples"]),
            frozenset(d.get("data_structures", ())),
        )
