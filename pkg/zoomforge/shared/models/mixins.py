import typing

from pydantic import BaseModel

from zoomforge.shared.utils import canonical_hash, canonical_json


class CanonicalMixin(BaseModel):
    # fields that never change what a run computes; left out of the hash.
    hash_exclude: typing.ClassVar[set[str]] = set()

    def canonical_dict(self) -> dict:
        return self.model_dump(mode="json", exclude=self.hash_exclude)

    def canonical_json(self) -> bytes:
        return canonical_json(self.canonical_dict())

    def config_hash(self) -> str:
        return canonical_hash(self.canonical_dict())
