import json

from tests.oracles import brute


def test_frozen_values_match_brute_force(frozen):
    # the frozen file must be exactly what the brute-force oracle produces
    assert json.loads(json.dumps(brute.compute(), sort_keys=True)) == frozen
