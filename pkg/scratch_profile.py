"""Profile the eliminator run on the real cone matrix with progress stats."""
import itertools, sys, time, heapq
sys.path.insert(0, "src")
from stabhom.intlinalg import SparseEliminator

def matmul(a, b):
    return tuple(
        tuple((a[i][0] & b[0][j]) ^ (a[i][1] & b[1][j]) ^ (a[i][2] & b[2][j]) for j in range(3))
        for i in range(3))

vecs = [v for v in itertools.product((0, 1), repeat=3) if any(v)]
mats = []
for rows in itertools.permutations(vecs, 3):
    r1, r2, r3 = rows
    span = {(0, 0, 0)}
    for v in (r1, r2, r3):
        span |= {tuple(a ^ b for a, b in zip(s, v)) for s in span}
    if len(span) == 8:
        mats.append(tuple(rows))
index = {m: i for i, m in enumerate(mats)}
N = len(mats)
mul = [[0] * N for _ in range(N)]
for i, a in enumerate(mats):
    for j, b in enumerate(mats):
        mul[i][j] = index[matmul(a, b)]
inv = [0] * N
ident = index[((1,0,0),(0,1,0),(0,0,1))]
for i in range(N):
    for j in range(N):
        if mul[i][j] == ident:
            inv[i] = j
            break
L = [i for i, m in enumerate(mats)
     if m[0][1] == 0 and m[0][2] == 0 and m[1][0] == 0 and m[2][0] == 0]
coset_rep = {}
reps = []
for i in range(N):
    k = min(mul[i][l] for l in L)
    if k not in coset_rep:
        coset_rep[k] = len(reps)
        reps.append(k)
coset_of = [coset_rep[min(mul[i][l] for l in L)] for i in range(N)]
NC = len(reps)
Gp = [i for i, m in enumerate(mats)
      if m[0][2] == 0 and m[1][2] == 0 and m[2] == (0, 0, 1)]
gp_index = {g: k for k, g in enumerate(Gp)}

elim = SparseEliminator(6 + N * NC)
def frow(t1, c):
    return 6 + t1 * NC + c
for k1, g1 in enumerate(Gp):
    for cp, x in enumerate(Gp):
        col = {}
        a = gp_index[mul[inv[g1]][x]]
        col[a] = col.get(a, 0) - 1
        col[cp] = col.get(cp, 0) + 1
        c2 = frow(g1, coset_of[x])
        col[c2] = col.get(c2, 0) + 1
        elim.add_column({k: v for k, v in col.items() if v})
add = elim.add_column
for g1 in range(N):
    ig1 = inv[g1]
    row3base = frow(g1, 0)
    mg = mul[g1]
    migrow = [coset_of[mul[ig1][reps[c]]] for c in range(NC)]
    for g2 in range(N):
        r1base = frow(g2, 0)
        r2base = frow(mg[g2], 0)
        for c in range(NC):
            col = {}
            r1 = r1base + migrow[c]
            col[r1] = 1
            r2 = r2base + c
            col[r2] = col.get(r2, 0) - 1
            r3 = row3base + c
            col[r3] = col.get(r3, 0) + 1
            add({k: v for k, v in col.items() if v})

print("columns:", elim.ncols, "entries:", sum(len(c) for c in elim.cols.values()))

# instrumented copy of run()
t0 = time.time()
heap = []
for r in sorted(elim.row_cols):
    cand = elim._row_best(r)
    if cand:
        heap.append(cand)
heapq.heapify(heap)
npiv = 0
pops = 0
t_select = 0.0
t_elim = 0.0
while heap:
    ts = time.time()
    key = heapq.heappop(heap)
    pops += 1
    r = key[2]
    cand = elim._row_best(r)
    if cand is None:
        t_select += time.time() - ts
        continue
    if cand > key:
        heapq.heappush(heap, cand)
        t_select += time.time() - ts
        continue
    _, _, r, c = cand
    t_select += time.time() - ts
    te = time.time()
    touched = elim._eliminate(r, c)
    npiv += 1
    for rr in touched:
        nxt = elim._row_best(rr)
        if nxt:
            heapq.heappush(heap, nxt)
    t_elim += time.time() - te
    if npiv % 500 == 0:
        nnz = sum(len(c) for c in elim.cols.values())
        maxrw = max((len(s) for s in elim.row_cols.values()), default=0)
        print(f"piv={npiv} pops={pops} nnz={nnz} maxrow={maxrw} "
              f"select={t_select:.1f}s elim={t_elim:.1f}s total={time.time()-t0:.1f}s", flush=True)
print("rank:", len(elim.pivots), "time:", time.time() - t0)
