# cython: language_level=3, boundscheck=False, wraparound=False
# cython: initializedcheck=False, cdivision=True
"""Compiled branch-and-bound kernel.

Mirrors :mod:`pmbatch.engine._pure` exactly: identical search order, pruning,
node counts, and results.  Any behavioral change here must be applied to the
pure implementation as well (the parity tests enforce this).
"""

from time import perf_counter

import numpy as np

from libc.stdint cimport int64_t, int8_t

STATUS_OPTIMAL = 0
STATUS_FEASIBLE = 1
STATUS_INFEASIBLE = 2
STATUS_UNKNOWN = 3

cdef int64_t TIME_CHECK_MASK = 255


cdef class _Solver:
    cdef int n, m, n_free, n_jobs
    cdef bint kind_s, has_deadline, has_node_limit, interrupted, has_best
    cdef double deadline
    cdef int64_t node_limit, nodes, best_obj
    cdef int64_t[::1] p, r, load, fam, setup, mach_r, mach_q, rank
    cdef int64_t[::1] elig_off, elig_dat
    cdef int64_t[::1] job_w, job_off, job_dat
    cdef int64_t[::1] slot_off            # per machine, length m + 1
    cdef int8_t[::1] is_free
    cdef int64_t[::1] mem                 # flat [sid * n + pos]
    cdef int64_t[::1] mem_len
    cdef int64_t[::1] slot_load
    cdef int64_t[::1] comp, static_lb
    cdef int8_t[::1] placed
    cdef int64_t[::1] free_ops
    cdef int64_t[::1] warm_k_of, warm_b_of    # per op; -1 when no warm slot
    cdef int64_t[::1] cand_k, cand_b, cand_pos
    cdef int64_t[::1] tmp_k, tmp_b, tmp_pos
    cdef int cand_cap
    cdef object best_slots
    cdef list free_slot_list

    # -------------------------------------------------------------- helpers

    cdef void insert(self, int64_t sid, int64_t pos, int64_t i) noexcept:
        cdef int64_t x, base = sid * self.n, L = self.mem_len[sid]
        for x in range(L, pos, -1):
            self.mem[base + x] = self.mem[base + x - 1]
        self.mem[base + pos] = i
        self.mem_len[sid] = L + 1
        self.slot_load[sid] += self.load[i]
        self.placed[i] = 1

    cdef void remove_at(self, int64_t sid, int64_t pos) noexcept:
        cdef int64_t x, base = sid * self.n, L = self.mem_len[sid]
        cdef int64_t i = self.mem[base + pos]
        for x in range(pos, L - 1):
            self.mem[base + x] = self.mem[base + x + 1]
        self.mem_len[sid] = L - 1
        self.slot_load[sid] -= self.load[i]
        self.placed[i] = 0

    cdef int64_t index_of(self, int64_t sid, int64_t i) noexcept:
        cdef int64_t x, base = sid * self.n
        for x in range(self.mem_len[sid]):
            if self.mem[base + x] == i:
                return x
        return -1

    cdef void retime(self, int64_t k) noexcept:
        cdef int64_t t = self.mach_r[k]
        cdef int64_t sid, L, start, i, pos
        for sid in range(self.slot_off[k], self.slot_off[k + 1]):
            L = self.mem_len[sid]
            if L == 0:
                continue
            start = t
            for pos in range(L):
                i = self.mem[sid * self.n + pos]
                if self.r[i] > start:
                    start = self.r[i]
            t = start + self.setup[self.fam[self.mem[sid * self.n]]]
            for pos in range(L):
                i = self.mem[sid * self.n + pos]
                t += self.p[i]
                self.comp[i] = t

    cdef int64_t lower_bound(self) noexcept:
        cdef int64_t total = 0, worst, v, i
        cdef int64_t j, x
        for j in range(self.n_jobs):
            worst = 0
            for x in range(self.job_off[j], self.job_off[j + 1]):
                i = self.job_dat[x]
                v = self.comp[i] if self.placed[i] else self.static_lb[i]
                if v > worst:
                    worst = v
            total += self.job_w[j] * worst
        return total

    cdef object snapshot(self):
        cdef int64_t sid, x
        out = {}
        for k, b in self.free_slot_list:
            sid = self.slot_off[k] + b
            ops = []
            for x in range(self.mem_len[sid]):
                ops.append(self.mem[sid * self.n + x])
            out[(k, b)] = tuple(ops)
        return out

    cdef bint leaf_has_gap(self) noexcept:
        cdef int64_t k, sid
        for k in range(self.m):
            for sid in range(self.slot_off[k], self.slot_off[k + 1] - 1):
                if (self.is_free[sid] and self.mem_len[sid] == 0
                        and self.is_free[sid + 1] and self.mem_len[sid + 1] > 0):
                    return True
        return False

    cdef int gen_candidates(self, int level, int64_t i) noexcept:
        cdef int cnt = 0
        cdef int base = level * self.cand_cap
        cdef int64_t li = self.load[i], fi = self.fam[i], ri = self.rank[i]
        cdef int64_t e, k, sid, b, L, x, pos, posr, wk, wb
        cdef int head, tail, c
        for e in range(self.elig_off[i], self.elig_off[i + 1]):
            k = self.elig_dat[e]
            if li > self.mach_q[k]:
                continue
            for sid in range(self.slot_off[k], self.slot_off[k + 1]):
                if not self.is_free[sid]:
                    continue
                b = sid - self.slot_off[k]
                L = self.mem_len[sid]
                if L > 0:
                    if (self.fam[self.mem[sid * self.n]] != fi
                            or self.slot_load[sid] + li > self.mach_q[k]):
                        continue
                    if self.kind_s:
                        for pos in range(L + 1):
                            self.cand_k[base + cnt] = k
                            self.cand_b[base + cnt] = b
                            self.cand_pos[base + cnt] = pos
                            cnt += 1
                    else:
                        posr = 0
                        for x in range(L):
                            if self.rank[self.mem[sid * self.n + x]] < ri:
                                posr += 1
                        self.cand_k[base + cnt] = k
                        self.cand_b[base + cnt] = b
                        self.cand_pos[base + cnt] = posr
                        cnt += 1
                else:
                    self.cand_k[base + cnt] = k
                    self.cand_b[base + cnt] = b
                    self.cand_pos[base + cnt] = 0
                    cnt += 1
        wk = self.warm_k_of[i]
        if wk >= 0:
            # stable partition: warm-slot candidates first, original order kept
            wb = self.warm_b_of[i]
            head = 0
            tail = 0
            for c in range(cnt):
                if self.cand_k[base + c] == wk and self.cand_b[base + c] == wb:
                    self.tmp_k[head] = self.cand_k[base + c]
                    self.tmp_b[head] = self.cand_b[base + c]
                    self.tmp_pos[head] = self.cand_pos[base + c]
                    head += 1
            if 0 < head < cnt:
                for c in range(cnt):
                    if (self.cand_k[base + c] != wk
                            or self.cand_b[base + c] != wb):
                        self.tmp_k[head + tail] = self.cand_k[base + c]
                        self.tmp_b[head + tail] = self.cand_b[base + c]
                        self.tmp_pos[head + tail] = self.cand_pos[base + c]
                        tail += 1
                for c in range(cnt):
                    self.cand_k[base + c] = self.tmp_k[c]
                    self.cand_b[base + c] = self.tmp_b[c]
                    self.cand_pos[base + c] = self.tmp_pos[c]
        return cnt

    cdef void dfs(self, int level):
        cdef int cnt, c, base
        cdef int64_t i, k, b, pos, sid, obj
        if level == self.n_free:
            if self.leaf_has_gap():
                return
            obj = self.lower_bound()
            if (not self.has_best) or obj < self.best_obj:
                self.best_obj = obj
                self.has_best = True
                self.best_slots = self.snapshot()
            return
        i = self.free_ops[level]
        cnt = self.gen_candidates(level, i)
        base = level * self.cand_cap
        for c in range(cnt):
            k = self.cand_k[base + c]
            b = self.cand_b[base + c]
            pos = self.cand_pos[base + c]
            self.nodes += 1
            if self.has_node_limit and self.nodes > self.node_limit:
                self.interrupted = True
                return
            if (self.has_deadline and (self.nodes & TIME_CHECK_MASK) == 0
                    and perf_counter() > self.deadline):
                self.interrupted = True
                return
            sid = self.slot_off[k] + b
            self.insert(sid, pos, i)
            self.retime(k)
            if (not self.has_best) or self.lower_bound() < self.best_obj:
                self.dfs(level + 1)
            self.remove_at(sid, pos)
            self.retime(k)
            if self.interrupted:
                return


def _flatten(seqs):
    off = np.zeros(len(seqs) + 1, dtype=np.int64)
    dat = []
    for ix, s in enumerate(seqs):
        dat.extend(s)
        off[ix + 1] = len(dat)
    return off, np.asarray(dat if dat else [0], dtype=np.int64)


def solve_subproblem(sub, time_limit=None, node_limit=None):
    """Return (status, best_slots, objective, bound, nodes); see _pure."""
    cdef _Solver sv = _Solver()
    n = sub.n_ops
    m = sub.n_machines
    sv.n = n
    sv.m = m
    sv.n_jobs = len(sub.job_w)
    sv.kind_s = bool(sub.kind_s)
    sv.p = np.asarray(sub.p, dtype=np.int64)
    sv.r = np.asarray(sub.r, dtype=np.int64)
    sv.load = np.asarray(sub.load, dtype=np.int64)
    sv.fam = np.asarray(sub.fam, dtype=np.int64)
    sv.setup = np.asarray(sub.setup, dtype=np.int64)
    sv.mach_r = np.asarray(sub.mach_r, dtype=np.int64)
    sv.mach_q = np.asarray(sub.mach_q, dtype=np.int64)
    sv.rank = np.asarray(sub.rank, dtype=np.int64)
    sv.elig_off, sv.elig_dat = _flatten(sub.elig)
    sv.job_w = np.asarray(sub.job_w, dtype=np.int64)
    sv.job_off, sv.job_dat = _flatten(sub.job_ops)

    slots_per = [len(row) for row in sub.fixed_content]
    total_slots = sum(slots_per)
    slot_off = np.zeros(m + 1, dtype=np.int64)
    for k in range(m):
        slot_off[k + 1] = slot_off[k] + slots_per[k]
    sv.slot_off = slot_off
    sv.is_free = np.zeros(max(total_slots, 1), dtype=np.int8)
    sv.mem = np.zeros(max(total_slots * n, 1), dtype=np.int64)
    sv.mem_len = np.zeros(max(total_slots, 1), dtype=np.int64)
    sv.slot_load = np.zeros(max(total_slots, 1), dtype=np.int64)
    sv.free_slot_list = []
    for k in range(m):
        for b in range(slots_per[k]):
            sid = slot_off[k] + b
            content = sub.fixed_content[k][b]
            if content is None:
                sv.is_free[sid] = 1
                sv.free_slot_list.append((k, b))
            else:
                for pos, i in enumerate(content):
                    sv.mem[sid * n + pos] = i
                    sv.slot_load[sid] += sv.load[i]
                sv.mem_len[sid] = len(content)

    sv.comp = np.zeros(max(n, 1), dtype=np.int64)
    sv.placed = np.ones(max(n, 1), dtype=np.int8)
    sv.static_lb = np.zeros(max(n, 1), dtype=np.int64)
    for k in range(m):
        sv.retime(k)
    free_ops = list(sub.free_ops)
    n_free = len(free_ops)
    sv.n_free = n_free
    sv.free_ops = np.asarray(free_ops if free_ops else [0], dtype=np.int64)
    for i in free_ops:
        sv.placed[i] = 0
        earliest = min(sv.mach_r[k] for k in sub.elig[i])
        sv.static_lb[i] = max(sv.r[i], earliest) + sv.setup[sv.fam[i]] + sv.p[i]

    sv.cand_cap = max(total_slots * (n + 1), 1)
    sv.cand_k = np.zeros(max(n_free, 1) * sv.cand_cap, dtype=np.int64)
    sv.cand_b = np.zeros(max(n_free, 1) * sv.cand_cap, dtype=np.int64)
    sv.cand_pos = np.zeros(max(n_free, 1) * sv.cand_cap, dtype=np.int64)
    sv.tmp_k = np.zeros(sv.cand_cap, dtype=np.int64)
    sv.tmp_b = np.zeros(sv.cand_cap, dtype=np.int64)
    sv.tmp_pos = np.zeros(sv.cand_cap, dtype=np.int64)

    sv.deadline = 0.0
    sv.has_deadline = False
    if time_limit:
        sv.deadline = perf_counter() + time_limit
        sv.has_deadline = True
    sv.has_node_limit = node_limit is not None
    sv.node_limit = node_limit if node_limit is not None else 0
    sv.nodes = 0
    sv.interrupted = False
    sv.has_best = False
    sv.best_obj = 0
    sv.best_slots = None

    sv.warm_k_of = np.full(max(n, 1), -1, dtype=np.int64)
    sv.warm_b_of = np.full(max(n, 1), -1, dtype=np.int64)
    if sub.warm is not None:
        # pre-register the warm start as the incumbent so the search only
        # needs strict improvements
        order = sorted(range(n_free), key=lambda lv: (sub.warm[lv][0],
                                                      sub.warm[lv][1],
                                                      sub.warm[lv][2]))
        for lv in order:
            i = free_ops[lv]
            k, b, pos = sub.warm[lv]
            sid = slot_off[k] + b
            sv.insert(sid, min(pos, sv.mem_len[sid]), i)
        for k in range(m):
            sv.retime(k)
        sv.best_obj = sv.lower_bound()
        sv.has_best = True
        sv.best_slots = sv.snapshot()
        for lv in order:
            i = free_ops[lv]
            k, b, _ = sub.warm[lv]
            sid = slot_off[k] + b
            sv.remove_at(sid, sv.index_of(sid, i))
        for k in range(m):
            sv.retime(k)
        for lv in range(n_free):
            sv.warm_k_of[free_ops[lv]] = sub.warm[lv][0]
            sv.warm_b_of[free_ops[lv]] = sub.warm[lv][1]

    root_bound = sv.lower_bound()

    sv.dfs(0)

    nodes = int(sv.nodes)
    if not sv.has_best:
        status = STATUS_UNKNOWN if sv.interrupted else STATUS_INFEASIBLE
        return status, None, None, int(root_bound), nodes
    if sv.interrupted:
        return (STATUS_FEASIBLE, sv.best_slots, int(sv.best_obj),
                int(root_bound), nodes)
    return (STATUS_OPTIMAL, sv.best_slots, int(sv.best_obj),
            int(sv.best_obj), nodes)
