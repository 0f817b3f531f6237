import pytest

from mbrec import BehaviorSchema, ingest

# 3 users x 3 items storefront example: u3's cart-backed neighborhood makes
# i1 reachable by two view>view>cart walks.
TOY_TRIPLES = [
    ("u1", "i2", "view"),
    ("u2", "i2", "view"),
    ("u3", "i2", "view"),
    ("u3", "i3", "view"),
    ("u1", "i1", "view"),
    ("u1", "i1", "cart"),
    ("u2", "i1", "cart"),
    ("u3", "i3", "purchase"),
]

TOY_BEHAVIORS = ("view", "cart", "purchase")


@pytest.fixture
def toy_schema():
    return BehaviorSchema(TOY_BEHAVIORS)


@pytest.fixture
def toy_dataset(toy_schema):
    return ingest(TOY_TRIPLES, toy_schema)
