import json
from pathlib import Path

import pytest

from ctxmem.models import MemoryItem, Provenance

FIXTURES = Path(__file__).parent / "fixtures"


def mk_item(mid="mem_0001", source="snippet", title="Tokyo Hotels",
            summary="Hotel search results for Tokyo.",
            context="User is browsing Booking.com",
            tags=None, app="Chrome", window="Booking.com - Tokyo",
            url=None, captured_at=1_700_000_000_000, sequence=1,
            raw_text=None, user_memo=None, branch_id=None, **kw) -> MemoryItem:
    return MemoryItem(
        id=mid, source=source, title=title, summary=summary,
        context_sentence=context,
        tags=list(tags) if tags is not None else ["travel", "hotels", "tokyo"],
        provenance=Provenance(app, window, url), captured_at=captured_at,
        sequence=sequence, raw_text=raw_text, user_memo=user_memo,
        branch_id=branch_id, **kw)


class FakeClock:
    def __init__(self, start=1_726_000_000_000, step=1000):
        self.t = start
        self.step = step

    def __call__(self):
        self.t += self.step
        return self.t


@pytest.fixture
def fake_clock():
    return FakeClock()


@pytest.fixture(scope="session")
def image_fixtures() -> dict:
    directory = FIXTURES / "images"
    hashes = json.loads((directory / "hashes.json").read_text())
    return {"dir": directory, "hashes": hashes}
