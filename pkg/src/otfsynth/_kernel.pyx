# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled winning/losing propagation kernel (same contract as ``_kernel_py``)."""

from libcpp.vector cimport vector

cdef enum:
    UNDECIDED = 0
    WIN = 1
    LOSE = 2


cdef class Classifier:
    cdef vector[vector[int]] out_tgt
    cdef vector[vector[char]] out_ctrl
    cdef vector[vector[int]] in_src
    cdef vector[vector[char]] in_ctrl
    cdef vector[char] marked
    cdef vector[int] front_c
    cdef vector[int] front_u
    cdef vector[char] status
    cdef vector[char] discovered
    cdef vector[int] local
    # scratch buffers reused across solves
    cdef vector[int] cone
    cdef vector[char] alive
    cdef vector[char] good_exit
    cdef vector[char] reach
    cdef vector[char] pushed
    cdef vector[int] work
    cdef vector[char] win_p

    def add_state(self, bint marked):
        self.out_tgt.push_back(vector[int]())
        self.out_ctrl.push_back(vector[char]())
        self.in_src.push_back(vector[int]())
        self.in_ctrl.push_back(vector[char]())
        self.marked.push_back(<char>marked)
        self.front_c.push_back(0)
        self.front_u.push_back(0)
        self.status.push_back(UNDECIDED)
        self.discovered.push_back(0)
        self.local.push_back(-1)
        return <int>self.status.size() - 1

    def discover(self, int s, int n_ctrl, int n_unc):
        self.discovered[s] = 1
        self.front_c[s] = n_ctrl
        self.front_u[s] = n_unc
        if n_ctrl + n_unc == 0:
            self.status[s] = LOSE
            return True
        return False

    def get_status(self, int s):
        return <int>self.status[s]

    @property
    def status_list(self):
        return [<int>x for x in self.status]

    def add_edge(self, int s, int t, bint ctrl, bint t_was_new):
        if ctrl:
            self.front_c[s] -= 1
        else:
            self.front_u[s] -= 1
        self.out_tgt[s].push_back(t)
        self.out_ctrl[s].push_back(<char>ctrl)
        self.in_src[t].push_back(s)
        self.in_ctrl[t].push_back(<char>ctrl)
        if self.status[s] != UNDECIDED:
            return [], []
        if t_was_new and self.status[t] == UNDECIDED:
            return [], []
        return self._resolve(s)

    cdef _resolve(self, int s):
        cdef size_t i = 0, j
        cdef int x, p, n, k
        self.cone.clear()
        self.cone.push_back(s)
        self.local[s] = 0
        while i < self.cone.size():
            x = self.cone[i]
            i += 1
            for j in range(self.in_src[x].size()):
                p = self.in_src[x][j]
                if self.status[p] == UNDECIDED and self.local[p] < 0:
                    self.local[p] = <int>self.cone.size()
                    self.cone.push_back(p)
        n = <int>self.cone.size()
        self._fixpoint(False)
        self.win_p = self.alive
        self._fixpoint(True)
        new_w = []
        new_l = []
        for k in range(n):
            x = self.cone[k]
            self.local[x] = -1
            if self.win_p[k]:
                new_w.append(x)
                self.status[x] = WIN
            elif not self.alive[k]:
                new_l.append(x)
                self.status[x] = LOSE
        return new_w, new_l

    cdef void _fixpoint(self, bint optimistic):
        cdef int n = <int>self.cone.size()
        cdef int k, x, t, lp, removed
        cdef size_t j
        cdef bint bad_unc, ge
        cdef char st
        self.alive.assign(n, 1)
        self.good_exit.assign(n, 0)
        self.work.clear()
        for k in range(n):
            x = self.cone[k]
            bad_unc = (self.front_u[x] > 0) and not optimistic
            ge = optimistic and (self.front_c[x] + self.front_u[x] > 0)
            for j in range(self.out_tgt[x].size()):
                t = self.out_tgt[x][j]
                if self.local[t] >= 0:
                    continue
                st = self.status[t]
                if st == WIN or (optimistic and st == UNDECIDED):
                    ge = True
                elif not self.out_ctrl[x][j]:
                    bad_unc = True
            self.good_exit[k] = ge
            if bad_unc:
                self.alive[k] = 0
                self.work.push_back(k)
        self._cascade()
        while True:
            self.reach.assign(n, 0)
            self.pushed.assign(n, 0)
            self.work.clear()
            for k in range(n):
                if not self.alive[k]:
                    continue
                if self.good_exit[k]:
                    self.reach[k] = 1
                    self.pushed[k] = 1
                    self.work.push_back(k)
                if self.marked[self.cone[k]] and not self.pushed[k]:
                    self.pushed[k] = 1
                    self.work.push_back(k)
            while self.work.size():
                k = self.work.back()
                self.work.pop_back()
                x = self.cone[k]
                for j in range(self.in_src[x].size()):
                    lp = self.local[self.in_src[x][j]]
                    if lp >= 0 and self.alive[lp] and not self.reach[lp]:
                        self.reach[lp] = 1
                        if not self.pushed[lp]:
                            self.pushed[lp] = 1
                            self.work.push_back(lp)
            removed = 0
            self.work.clear()
            for k in range(n):
                if self.alive[k] and not self.reach[k]:
                    self.alive[k] = 0
                    self.work.push_back(k)
                    removed += 1
            if removed == 0:
                return
            self._cascade()

    cdef void _cascade(self):
        cdef int k, x, lp
        cdef size_t j
        while self.work.size():
            k = self.work.back()
            self.work.pop_back()
            x = self.cone[k]
            for j in range(self.in_src[x].size()):
                lp = self.local[self.in_src[x][j]]
                if not self.in_ctrl[x][j] and lp >= 0 and self.alive[lp]:
                    self.alive[lp] = 0
                    self.work.push_back(lp)

    def closes_marked_cycle(self, int s, int t):
        cdef vector[char] fwd, bwd
        cdef vector[int] stack
        cdef int x, y, n = <int>self.status.size()
        cdef size_t j
        fwd.assign(n, 0)
        fwd[t] = 1
        stack.push_back(t)
        while stack.size():
            x = stack.back()
            stack.pop_back()
            for j in range(self.out_tgt[x].size()):
                y = self.out_tgt[x][j]
                if not fwd[y]:
                    fwd[y] = 1
                    stack.push_back(y)
        if not fwd[s]:
            return False
        bwd.assign(n, 0)
        bwd[s] = 1
        stack.push_back(s)
        while stack.size():
            x = stack.back()
            stack.pop_back()
            if self.marked[x] and fwd[x]:
                return True
            for j in range(self.in_src[x].size()):
                y = self.in_src[x][j]
                if not bwd[y]:
                    bwd[y] = 1
                    stack.push_back(y)
        return False

