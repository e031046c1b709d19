"""Frozen objectives from the 10^6-iteration proximal-gradient
reference on the 20 small instances (see make_reference.py)."""

SMALL_INSTANCE_OBJECTIVES = {
    0: 1.207031038826075,
    1: 0.8964864042562578,
    2: 1.2151389366694292,
    3: 1.4179167956263443,
    4: 1.1267984072739516,
    5: 1.2827453818954238,
    6: 0.7662537529150131,
    7: 1.2407457768654122,
    8: 0.8466295547334217,
    9: 1.2914970804646435,
    10: 0.9904263783895259,
    11: 1.1922008654251357,
    12: 0.9246093223778742,
    13: 1.3600692765786566,
    14: 1.0165333770931015,
    15: 0.726701506035964,
    16: 1.2806621641913423,
    17: 1.193341785891268,
    18: 1.1952669750234404,
    19: 1.0213401776809359,
}
