"""JSON-lines front end for a prior-refinement session.

Each input line is one request::

    {"kind": "individual", "epsilon": 0.5, "distance": "absolute",
     "prior": {"outcomes": [0, 1], "probs": [0.99, 0.01]},
     "query": {"attribute": "income", "row": 3}}

``prior`` may instead be ``{"edges": [...], "densities": [...]}`` for a
piecewise-uniform density, or be omitted together with ``"range": [lo, hi]``
for a uniform prior.  The true answer comes from ``query`` (a cell, or a
``mean``/``sum``/``count``/``min``/``max`` statistic with an optional
``where`` equality filter) when a data set is loaded, else from ``value``.

Each output line is ``{"value": v}``, ``{"refused": true,
"remaining_budget": r}`` or ``{"error": message}``.  Query ``i`` draws from
the stream keyed by ``(seed, i)``, so a transcript replays identically.
"""

import json
import math

from .errors import SDCError, ValidationError
from .refinement import (DiscretePrior, PiecewiseUniformPrior, Query, Refusal,
                         RefinementFactors, RefinementSession)
from .rng import substream

_STATS = ("mean", "sum", "count", "min", "max")


def parse_prior(req):
    spec = req.get("prior")
    distance = req.get("distance", "absolute")
    if spec is None:
        rng = req.get("range")
        if not (isinstance(rng, list) and len(rng) == 2):
            raise ValidationError("request needs a prior or a two-element range")
        lo, hi = float(rng[0]), float(rng[1])
        if not hi > lo:
            raise ValidationError("range must satisfy lo < hi")
        return PiecewiseUniformPrior.uniform(lo, hi)
    if not isinstance(spec, dict):
        raise ValidationError("prior must be a JSON object")
    if "outcomes" in spec:
        return DiscretePrior(tuple(spec["outcomes"]), tuple(spec["probs"]), distance)
    if "edges" in spec:
        if distance != "absolute":
            raise ValidationError("continuous priors use the absolute distance")
        return PiecewiseUniformPrior(tuple(spec["edges"]), tuple(spec["densities"]))
    raise ValidationError("prior needs outcomes/probs or edges/densities")


def true_answer(req, table):
    if table is None:
        if "value" not in req:
            raise ValidationError("no data set loaded: the request must carry 'value'")
        return req["value"]
    q = req.get("query")
    if not isinstance(q, dict) or "attribute" not in q:
        raise ValidationError("request needs a query with an attribute")
    col = table.column(q["attribute"])
    if "row" in q:
        r = q["row"]
        if not (isinstance(r, int) and 0 <= r < len(col)):
            raise ValidationError(f"row must be an index in [0, {len(col)})")
        return col[r]
    stat = q.get("statistic")
    if stat not in _STATS:
        raise ValidationError(f"statistic must be one of {_STATS}")
    keep = range(len(table))
    for name, value in (q.get("where") or {}).items():
        other = table.column(name)
        keep = [i for i in keep if other[i] == value]
    vals = [col[i] for i in keep]
    if stat == "count":
        return len(vals)
    if not vals:
        raise ValidationError("the filter selects no rows")
    if stat == "sum":
        return math.fsum(vals)
    if stat == "mean":
        return math.fsum(vals) / len(vals)
    return min(vals) if stat == "min" else max(vals)


def handle(session, req, index, seed, table):
    if not isinstance(req, dict):
        raise ValidationError("request must be a JSON object")
    kind = req.get("kind")
    eps = req.get("epsilon")
    if not isinstance(eps, (int, float)) or isinstance(eps, bool):
        raise ValidationError("epsilon must be a number")
    factors = None
    if "factors" in req:
        up, down = req["factors"]
        factors = RefinementFactors(float(up), float(down), kind)
    query = Query(kind, parse_prior(req), float(eps), factors)
    result = session.submit(query, true_answer(req, table), substream(seed, index))
    if isinstance(result, Refusal):
        return {"refused": True, "remaining_budget": result.remaining_budget}
    value = result.value
    return {"value": value.item() if hasattr(value, "item") else value}


def serve(lines, out, epsilon, seed, table=None):
    """Answer every request line; malformed requests get an error line and spend nothing."""
    session = RefinementSession(epsilon)
    for index, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            reply = handle(session, json.loads(line), index, seed, table)
        except json.JSONDecodeError as exc:
            reply = {"error": f"invalid JSON: {exc}"}
        except (SDCError, ValueError, TypeError, KeyError) as exc:
            reply = {"error": str(exc)}
        out.write(json.dumps(reply) + "\n")
        out.flush()
    return session
