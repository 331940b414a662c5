import random
import string

import pytest

from chainlock import canonical
from chainlock.errors import NonCanonicalizable


def test_key_order_is_insignificant():
    assert canonical.canonical_bytes({"b": 1, "a": 2}) == canonical.canonical_bytes(
        {"a": 2, "b": 1}
    )


def test_empty_object_is_two_bytes():
    assert canonical.canonical_bytes({}) == b"{}"


def test_no_insignificant_whitespace():
    assert canonical.canonical_text({"a": [1, 2], "b": "x"}) == '{"a":[1,2],"b":"x"}'


def test_nan_rejected():
    with pytest.raises(NonCanonicalizable):
        canonical.canonical_bytes({"x": float("nan")})
    with pytest.raises(NonCanonicalizable):
        canonical.canonical_bytes([float("inf")])


def test_non_string_keys_rejected():
    with pytest.raises(NonCanonicalizable):
        canonical.canonical_bytes({1: "x"})


def test_unsupported_types_rejected():
    with pytest.raises(NonCanonicalizable):
        canonical.canonical_bytes({"x": object()})


def test_unicode_keys_sort_by_code_point():
    # UTF-8 byte order equals code-point order, which is Python's str order.
    data = {"é": 1, "z": 2, "a": 3, "中": 4}
    text = canonical.canonical_text(data)
    assert text == '{"a":3,"z":2,"é":1,"中":4}'


def _random_value(rng: random.Random, depth: int = 0):
    choices = ["int", "float", "str", "bool", "none"]
    if depth < 3:
        choices += ["list", "dict"]
    kind = rng.choice(choices)
    if kind == "int":
        return rng.randint(-(10**9), 10**9)
    if kind == "float":
        return rng.uniform(-1e6, 1e6)
    if kind == "str":
        alphabet = string.ascii_letters + string.digits + ' \t"\\é中'
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
    if kind == "bool":
        return rng.random() < 0.5
    if kind == "none":
        return None
    if kind == "list":
        return [_random_value(rng, depth + 1) for _ in range(rng.randint(0, 4))]
    return {
        "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(1, 6))):
            _random_value(rng, depth + 1)
        for _ in range(rng.randint(0, 4))
    }


def test_serialize_parse_serialize_is_stable():
    rng = random.Random(20260108)
    for _ in range(1000):
        value = _random_value(rng)
        once = canonical.canonical_bytes(value)
        again = canonical.canonical_bytes(canonical.parse(once))
        assert once == again


def test_shortest_float_form_round_trips():
    for value in [0.1, 1.0, -0.0, 1e300, 3.141592653589793, 2.0 / 3.0]:
        text = canonical.canonical_text(value)
        assert canonical.parse(text) == value
