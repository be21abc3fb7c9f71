"""Independent straight-line reimplementation of the strict-equation forward.

Everything here is plain Python scalar arithmetic over nested lists: no torch,
no shared code with the package's model classes. It exists solely to verify
the main forward pass on tiny inputs, so only configurations with every axis
at most MAX_SIZE are accepted (single head, no residual, no layer norm).
"""

from __future__ import annotations

import math

MAX_SIZE = 4


def _to_lists(arr):
    try:
        return arr.tolist()
    except AttributeError:
        return arr


def _affine(weight, bias, vec):
    # weight rows are output units: out[r] = bias[r] + sum_c weight[r][c] * vec[c]
    out = []
    for r in range(len(weight)):
        acc = bias[r]
        for c in range(len(weight[r])):
            acc += weight[r][c] * vec[c]
        out.append(acc)
    return out


def _relu(vec):
    return [v if v > 0.0 else 0.0 for v in vec]


def _softmax(row):
    peak = max(row)
    exps = [math.exp(v - peak) for v in row]
    total = sum(exps)
    return [e / total for e in exps]


def _sigmoid(v):
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def _attend(queries, keys, values, dim):
    # one head: scores scaled by sqrt(dim), rows normalized over the key axis
    out = []
    scale = math.sqrt(dim)
    for q in queries:
        scores = []
        for k in keys:
            dot = 0.0
            for c in range(dim):
                dot += q[c] * k[c]
            scores.append(dot / scale)
        weights = _softmax(scores)
        blended = [0.0] * dim
        for w, v in zip(weights, values):
            for c in range(dim):
                blended[c] += w * v[c]
        out.append(blended)
    return out


def _block(h, c_spatial, c_temporal, weights, prefix, dim):
    steps, regions = len(h), len(h[0])
    qw, qb = weights[f"{prefix}.spatial_attn.q_map.weight"], weights[f"{prefix}.spatial_attn.q_map.bias"]
    kw, kb = weights[f"{prefix}.spatial_attn.k_map.weight"], weights[f"{prefix}.spatial_attn.k_map.bias"]
    vw, vb = weights[f"{prefix}.spatial_attn.v_map.weight"], weights[f"{prefix}.spatial_attn.v_map.bias"]
    h_spatial = []
    for j in range(steps):
        qs = [_affine(qw, qb, h[j][i]) for i in range(regions)]
        ks = [_affine(kw, kb, h[j][i]) for i in range(regions)]
        vs = [_affine(vw, vb, h[j][i]) for i in range(regions)]
        h_spatial.append(_attend(qs, ks, vs, dim))

    qw, qb = weights[f"{prefix}.temporal_attn.q_map.weight"], weights[f"{prefix}.temporal_attn.q_map.bias"]
    kw, kb = weights[f"{prefix}.temporal_attn.k_map.weight"], weights[f"{prefix}.temporal_attn.k_map.bias"]
    vw, vb = weights[f"{prefix}.temporal_attn.v_map.weight"], weights[f"{prefix}.temporal_attn.v_map.bias"]
    h_temporal = [[None] * regions for _ in range(steps)]
    for i in range(regions):
        qs = [_affine(qw, qb, h[j][i]) for j in range(steps)]
        ks = [_affine(kw, kb, h[j][i]) for j in range(steps)]
        vs = [_affine(vw, vb, h[j][i]) for j in range(steps)]
        mixed = _attend(qs, ks, vs, dim)
        for j in range(steps):
            h_temporal[j][i] = mixed[j]

    fused = []
    for j in range(steps):
        row = []
        for i in range(regions):
            token = []
            for c in range(dim):
                p = _sigmoid(c_spatial[i][c] + c_temporal[j][c])
                token.append(p * h_spatial[j][i][c] + (1.0 - p) * h_temporal[j][i][c])
            row.append(token)
        fused.append(row)
    return fused


def oracle_forward(weights, x, t_past, t_future, s_rows, lap,
                   encoder_layers, decoder_layers, hidden_dim, str_compose="concat"):
    """Strict-mode forward on one window; returns y_hat as nested lists.

    `weights` maps the model's state-dict names to arrays/nested lists.
    Inputs are unbatched: x [T_past][n][f], t_past [T_past][t_dim],
    t_future [T_future][t_dim], s_rows [n][s_dim], lap [n][lap_dim].
    """
    weights = {k: _to_lists(v) for k, v in weights.items()}
    x = _to_lists(x)
    t_past = _to_lists(t_past)
    t_future = _to_lists(t_future)
    s_rows = _to_lists(s_rows)
    lap = _to_lists(lap)

    past_steps, regions = len(x), len(x[0])
    future_steps = len(t_future)
    for name, size in (("regions", regions), ("past steps", past_steps),
                       ("future steps", future_steps), ("hidden dim", hidden_dim)):
        if size > MAX_SIZE:
            raise ValueError(f"oracle accepts tiny configs only: {name} = {size} > {MAX_SIZE}")

    dim = hidden_dim
    value = [
        [_relu(_affine(weights["embedding.value_map.weight"],
                       weights["embedding.value_map.bias"], x[j][i]))
         for i in range(regions)]
        for j in range(past_steps)
    ]
    c_spatial = [
        _relu(_affine(weights["embedding.spatial_map.weight"],
                      weights["embedding.spatial_map.bias"], s_rows[i] + lap[i]))
        for i in range(regions)
    ]
    c_t_past = [
        _relu(_affine(weights["embedding.temporal_map.weight"],
                      weights["embedding.temporal_map.bias"], t_past[j]))
        for j in range(past_steps)
    ]
    c_t_future = [
        _relu(_affine(weights["embedding.temporal_map.weight"],
                      weights["embedding.temporal_map.bias"], t_future[j]))
        for j in range(future_steps)
    ]

    def fuse(c_t_rows, steps):
        ste = []
        for j in range(steps):
            part_t = _relu(_affine(weights["embedding.ste_fuse_t.weight"],
                                   weights["embedding.ste_fuse_t.bias"], c_t_rows[j]))
            row = []
            for i in range(regions):
                part_s = _relu(_affine(weights["embedding.ste_fuse_s.weight"],
                                       weights["embedding.ste_fuse_s.bias"], c_spatial[i]))
                row.append([part_s[c] + part_t[c] for c in range(dim)])
            ste.append(row)
        return ste

    ste_past = fuse(c_t_past, past_steps)
    ste_future = fuse(c_t_future, future_steps)

    if str_compose == "concat":
        h = [[value[j][i] + ste_past[j][i] for i in range(regions)] for j in range(past_steps)]
    else:
        h = [
            [[value[j][i][c] + ste_past[j][i][c] for c in range(dim)] for i in range(regions)]
            for j in range(past_steps)
        ]

    for layer in range(encoder_layers):
        h = _block(h, c_spatial, c_t_past, weights, f"encoder.{layer}", dim)

    qw, qb = weights["mapper.q_map.weight"], weights["mapper.q_map.bias"]
    kw, kb = weights["mapper.k_map.weight"], weights["mapper.k_map.bias"]
    vw, vb = weights["mapper.v_map.weight"], weights["mapper.v_map.bias"]
    h_future = [[None] * regions for _ in range(future_steps)]
    for i in range(regions):
        qs = [_affine(qw, qb, ste_future[j][i]) for j in range(future_steps)]
        ks = [_affine(kw, kb, ste_past[j][i]) for j in range(past_steps)]
        vs = [_affine(vw, vb, h[j][i]) for j in range(past_steps)]
        mapped = _attend(qs, ks, vs, dim)
        for j in range(future_steps):
            h_future[j][i] = mapped[j]

    g = h_future
    for layer in range(decoder_layers):
        g = _block(g, c_spatial, c_t_future, weights, f"decoder.{layer}", dim)

    return [
        [_affine(weights["head.weight"], weights["head.bias"], g[j][i])
         for i in range(regions)]
        for j in range(future_steps)
    ]


def weights_from_state_dict(state_dict):
    """Adapter: detach a torch state dict into plain nested lists."""
    out = {}
    for key, tensor in state_dict.items():
        out[key] = tensor.detach().cpu().double().numpy().tolist()
    return out
