"""Independent brute-force oracles used to cross-check the toolkit.

Everything here is plain-Python loop code on tuples, computed along a
different path than the library: explicit match enumeration, pointwise
precision maxima at each recall threshold, and exhaustive permutation
search for assignments.
"""

from __future__ import annotations

from itertools import permutations

ORACLE_IOU_THRESHOLDS = [round(0.5 + 0.05 * k, 2) for k in range(10)]
ORACLE_RECALL_POINTS = [round(0.01 * k, 2) for k in range(101)]


def oracle_iou(a, b):
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    inter = iw * ih if iw > 0 and ih > 0 else 0.0
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


def _oracle_match_pair(gts, dets, threshold):
    """Greedy matching of one frame pair; dets must be score-sorted already.

    gts: list of (xywh, category); dets: list of (xywh, category, score).
    Returns per-detection TP flags.
    """
    taken = [False] * len(gts)
    flags = []
    for dbox, dcat, _ in dets:
        best = -1
        best_iou = None
        for g, (gbox, gcat) in enumerate(gts):
            if taken[g] or gcat != dcat:
                continue
            v = oracle_iou(dbox, gbox)
            if v < threshold:
                continue
            if best_iou is None or v > best_iou:
                best_iou = v
                best = g
        if best >= 0:
            taken[best] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def oracle_average_precision(pairs):
    """COCO-style AP (area=all, no crowd boxes) via explicit enumeration.

    pairs: list of (gt, det) where gt is [(xywh, category), ...] and det is
    [(xywh, category, score, det_id), ...]. Returns (ap, ap50, ap75), with
    None when no category has ground truth.
    """
    cats = sorted(
        {c for gt, _ in pairs for _, c in gt} | {c for _, det in pairs for _, c, _, _ in det}
    )
    per_cat = {}
    for cat in cats:
        npig = sum(1 for gt, _ in pairs if gt for _, c in gt if c == cat)
        if npig == 0:
            continue
        threshold_aps = []
        for threshold in ORACLE_IOU_THRESHOLDS:
            pooled = []  # (score, pair_index, rank, tp)
            for pair_index, (gt, det) in enumerate(pairs):
                gts = [(box, c) for box, c in gt if c == cat]
                dets = sorted(
                    [(box, c, score, det_id) for box, c, score, det_id in det if c == cat],
                    key=lambda r: (-r[2], r[3]),
                )[:100]
                flags = _oracle_match_pair(gts, [(b, c, s) for b, c, s, _ in dets], threshold)
                for rank, ((_, _, score, _), tp) in enumerate(zip(dets, flags)):
                    pooled.append((score, pair_index, rank, tp))
            pooled.sort(key=lambda r: (-r[0], r[1], r[2]))
            tp_cum = 0
            points = []  # (recall, precision)
            for k, (_, _, _, tp) in enumerate(pooled, start=1):
                tp_cum += 1 if tp else 0
                points.append((tp_cum / npig, tp_cum / k))
            total = 0.0
            for r in ORACLE_RECALL_POINTS:
                best = 0.0
                for recall, precision in points:
                    if recall >= r and precision > best:
                        best = precision
                total += best
            threshold_aps.append(total / len(ORACLE_RECALL_POINTS))
        per_cat[cat] = threshold_aps
    if not per_cat:
        return None, None, None
    ap = sum(sum(v) / len(v) for v in per_cat.values()) / len(per_cat)
    ap50 = sum(v[0] for v in per_cat.values()) / len(per_cat)
    ap75 = sum(v[5] for v in per_cat.values()) / len(per_cat)
    return ap, ap50, ap75


def random_ap_instance(rng):
    """Random tiny evaluation instance for oracle cross-checks.

    Returns (gt_by_frame, dets_by_frame, oracle_pairs) where the oracle view
    mirrors the frame-id-sorted pair order the library evaluates in.
    """
    from streambench import AnnotatedBox, BBox, Detection

    n_frames = int(rng.integers(1, 6))
    n_cats = int(rng.integers(1, 3))
    frame_ids = list(range(n_frames))
    gt_budget = int(rng.integers(0, 9))
    det_budget = int(rng.integers(0, 9))
    gt_by_frame = {fid: [] for fid in frame_ids}
    dets_by_frame = {fid: [] for fid in frame_ids}
    for _ in range(gt_budget):
        fid = int(rng.choice(frame_ids))
        cat = int(rng.integers(1, n_cats + 1))
        box = BBox(*rng.uniform(0, 40, 2), *rng.uniform(2, 25, 2))
        gt_by_frame[fid].append(AnnotatedBox(bbox=box, category_id=cat))
    det_id = 0
    for _ in range(det_budget):
        fid = int(rng.choice(frame_ids))
        cat = int(rng.integers(1, n_cats + 1))
        if gt_by_frame[fid] and rng.random() < 0.6:
            base = gt_by_frame[fid][int(rng.integers(0, len(gt_by_frame[fid])))].bbox
            box = BBox(
                base.x + rng.normal(0, 3),
                base.y + rng.normal(0, 3),
                max(base.w + rng.normal(0, 2), 1.0),
                max(base.h + rng.normal(0, 2), 1.0),
            )
        else:
            box = BBox(*rng.uniform(0, 40, 2), *rng.uniform(2, 25, 2))
        # quantized scores provoke ties, det_id breaks them
        score = float(rng.integers(0, 11)) / 10.0
        dets_by_frame[fid].append(
            Detection(frame_id=fid, bbox=box, category_id=cat, score=score, det_id=det_id)
        )
        det_id += 1
    oracle_pairs = []
    for fid in sorted(gt_by_frame):
        gt = [(b.bbox.as_xywh(), b.category_id) for b in gt_by_frame[fid]]
        det = [(d.bbox.as_xywh(), d.category_id, d.score, d.det_id) for d in dets_by_frame[fid]]
        oracle_pairs.append((gt, det))
    return gt_by_frame, dets_by_frame, oracle_pairs


def oracle_best_assignment(benefit, feasible):
    """Exhaustive permutation search maximizing total benefit over feasible pairs.

    benefit: list of rows; feasible: parallel boolean rows. Returns the best
    total and one optimal sorted pair list.
    """
    n_rows = len(benefit)
    n_cols = len(benefit[0]) if n_rows else 0
    best_total = 0.0
    best_pairs: list[tuple[int, int]] = []
    cols = list(range(n_cols))
    if n_rows == 0 or n_cols == 0:
        return 0.0, []
    for rows_subset in _subsets(range(n_rows), min(n_rows, n_cols)):
        for perm in permutations(cols, len(rows_subset)):
            total = 0.0
            pairs = []
            for r, c in zip(rows_subset, perm):
                if feasible[r][c]:
                    total += benefit[r][c]
                    pairs.append((r, c))
            if total > best_total + 1e-12:
                best_total = total
                best_pairs = sorted(pairs)
    return best_total, best_pairs


def _subsets(items, max_size):
    items = list(items)
    out = [[]]
    for size in range(1, max_size + 1):
        out.extend(_combinations(items, size))
    return out


def _combinations(items, size):
    if size == 0:
        return [[]]
    if len(items) < size:
        return []
    head, rest = items[0], items[1:]
    with_head = [[head] + c for c in _combinations(rest, size - 1)]
    return with_head + _combinations(rest, size)
