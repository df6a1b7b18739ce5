"""Pure-Python winning/losing propagation kernel.

Mirrors ``_kernel.pyx`` exactly; used when the compiled extension is missing
or ``OTFSYNTH_PURE=1`` is set.

Only states that can reach the source of a newly expanded transition may
change classification, so each update re-solves both fixed points on that
backward cone of undecided states. Decided states and undecided states
outside the cone keep their status and act as fixed boundary values.
"""

UNDECIDED = 0
WIN = 1
LOSE = 2


class Classifier:
    def __init__(self):
        self.out_tgt = []
        self.out_ctrl = []
        self.in_src = []
        self.in_ctrl = []
        self.marked = []
        self.front_c = []
        self.front_u = []
        self.status = []
        self.discovered = []
        self._local = []  # global id -> local index during a solve, -1 otherwise

    def add_state(self, marked):
        self.out_tgt.append([])
        self.out_ctrl.append([])
        self.in_src.append([])
        self.in_ctrl.append([])
        self.marked.append(bool(marked))
        self.front_c.append(0)
        self.front_u.append(0)
        self.status.append(UNDECIDED)
        self.discovered.append(False)
        self._local.append(-1)
        return len(self.status) - 1

    def discover(self, s, n_ctrl, n_unc):
        """Record the frontier of a newly reached state. Returns True if it is a deadlock."""
        self.discovered[s] = True
        self.front_c[s] = n_ctrl
        self.front_u[s] = n_unc
        if n_ctrl + n_unc == 0:
            self.status[s] = LOSE
            return True
        return False

    def get_status(self, s):
        return self.status[s]

    @property
    def status_list(self):
        return list(self.status)

    def add_edge(self, s, t, ctrl, t_was_new):
        """Move one frontier transition of ``s`` into the explored graph.

        Returns ``(newly_winning, newly_losing)`` lists of state ids.
        """
        if ctrl:
            self.front_c[s] -= 1
        else:
            self.front_u[s] -= 1
        self.out_tgt[s].append(t)
        self.out_ctrl[s].append(bool(ctrl))
        self.in_src[t].append(s)
        self.in_ctrl[t].append(bool(ctrl))
        if self.status[s] != UNDECIDED:
            return [], []
        if t_was_new and self.status[t] == UNDECIDED:
            # a fresh state with pending frontier is neither pessimistically
            # winning nor optimistically losing: same as the sink it replaces
            return [], []
        return self._resolve(s)

    def _resolve(self, s):
        status = self.status
        local = self._local
        cone = [s]
        local[s] = 0
        i = 0
        while i < len(cone):
            x = cone[i]
            i += 1
            for p in self.in_src[x]:
                if status[p] == UNDECIDED and local[p] < 0:
                    local[p] = len(cone)
                    cone.append(p)
        win_p = self._fixpoint(cone, optimistic=False)
        win_o = self._fixpoint(cone, optimistic=True)
        new_w, new_l = [], []
        for k, x in enumerate(cone):
            if win_p[k]:
                new_w.append(x)
            elif not win_o[k]:
                new_l.append(x)
        for x in cone:
            local[x] = -1
        for x in new_w:
            status[x] = WIN
        for x in new_l:
            status[x] = LOSE
        return new_w, new_l

    def _fixpoint(self, cone, optimistic):
        status = self.status
        local = self._local
        n = len(cone)
        alive = [True] * n
        good_exit = [False] * n

        def kill(k, stack):
            alive[k] = False
            stack.append(k)

        stack = []
        for k, x in enumerate(cone):
            bad_unc = (self.front_u[x] > 0) and not optimistic
            ge = optimistic and (self.front_c[x] + self.front_u[x] > 0)
            for t, c in zip(self.out_tgt[x], self.out_ctrl[x]):
                if local[t] >= 0:
                    continue
                st = status[t]
                good = st == WIN or (optimistic and st == UNDECIDED)
                if good:
                    ge = True
                elif not c:
                    bad_unc = True
            good_exit[k] = ge
            if bad_unc and alive[k]:
                kill(k, stack)
        self._cascade(cone, alive, stack)
        while True:
            reach = [False] * n
            pushed = [False] * n
            work = []
            for k, x in enumerate(cone):
                if not alive[k]:
                    continue
                if good_exit[k]:
                    reach[k] = True
                    pushed[k] = True
                    work.append(k)
                if self.marked[x] and not pushed[k]:
                    pushed[k] = True
                    work.append(k)
            while work:
                k = work.pop()
                for p in self.in_src[cone[k]]:
                    lp = local[p]
                    if lp >= 0 and alive[lp] and not reach[lp]:
                        reach[lp] = True
                        if not pushed[lp]:
                            pushed[lp] = True
                            work.append(lp)
            removed = [k for k in range(n) if alive[k] and not reach[k]]
            if not removed:
                return alive
            stack = []
            for k in removed:
                kill(k, stack)
            self._cascade(cone, alive, stack)

    def _cascade(self, cone, alive, stack):
        local = self._local
        while stack:
            k = stack.pop()
            x = cone[k]
            for p, c in zip(self.in_src[x], self.in_ctrl[x]):
                lp = local[p]
                if not c and lp >= 0 and alive[lp]:
                    alive[lp] = False
                    stack.append(lp)

    def closes_marked_cycle(self, s, t):
        """Does the explored edge ``s -> t`` lie on a cycle through a marked state?"""
        fwd = {t}
        stack = [t]
        while stack:
            x = stack.pop()
            for y in self.out_tgt[x]:
                if y not in fwd:
                    fwd.add(y)
                    stack.append(y)
        if s not in fwd:
            return False
        bwd = {s}
        stack = [s]
        while stack:
            x = stack.pop()
            if self.marked[x] and x in fwd:
                return True
            for y in self.in_src[x]:
                if y not in bwd:
                    bwd.add(y)
                    stack.append(y)
        return False
