"""Input schemas for the figure kinds, matching the producing CLI exactly."""

PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

STOKES = {
    "type": "object",
    "required": ["mu", "points", "cuts", "lines"],
    "properties": {
        "mu": PAIR,
        "kind": {"type": "string"},
        "points": {"type": "array", "items": PAIR},
        "cuts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["point", "angle", "line"],
                "properties": {
                    "point": {"type": "integer"},
                    "angle": {"type": "number"},
                    "line": {"type": "integer"},
                },
            },
        },
        "lines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "dir", "vertices", "termination"],
                "properties": {
                    "source": {"type": "integer"},
                    "dir": {"type": "integer"},
                    "vertices": {"type": "array", "items": PAIR, "minItems": 2},
                    "termination": {"type": "string"},
                },
            },
        },
        "field": {
            "type": "object",
            "required": ["x", "y", "re_z"],
            "properties": {
                "x": {"type": "array", "items": {"type": "number"}},
                "y": {"type": "array", "items": {"type": "number"}},
                "re_z": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
            },
        },
    },
}

MIGRATE = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "required": ["mu", "points"],
        "properties": {"mu": PAIR, "points": {"type": "array", "items": PAIR, "minItems": 1}},
    },
}

SPECTRUM = {
    "type": "object",
    "required": ["h", "box", "count", "eigenvalues"],
    "properties": {
        "h": {"type": "number"},
        "box": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
        "count": {"type": "integer"},
        "eigenvalues": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["lambda", "residual"],
                "properties": {"lambda": PAIR, "residual": {"type": "number"}},
            },
        },
    },
}

GAPSCALING = {
    "type": "object",
    "required": ["points"],
    "properties": {
        "points": {
            "type": "array",
            "minItems": 2,
            "items": {
                "type": "object",
                "required": ["h", "gap"],
                "properties": {"h": {"type": "number"}, "gap": {"type": "number"}},
            },
        },
        "fitted_slope": {"type": "number"},
        "J_ref": {"type": "number"},
    },
}

BY_KIND = {
    "stokes": STOKES,
    "migrate": MIGRATE,
    "spectrum": SPECTRUM,
    "gapscaling": GAPSCALING,
}
