"""Synchronous message-passing cluster with round and memory accounting.

One machine per set plus a designated central machine (machine 1 doubles as
central so a converge-cast over m machines costs exactly ceil(log2 m)
rounds).  Only received bits are accounted: every machine has an inbox
budget of mem_c * n * ceil(log2(n+2))**mem_e bits per round, and a round in
which any inbox exceeds the budget raises BudgetError.

Primitives append entries to a round log.  Long loops (the weight-update
iterations) coalesce their per-iteration entries into one record so logs
stay proportional to the primitive schedule, not to the iteration count;
the sum of logged rounds always equals the cluster round counter.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

DEFAULT_MEM_C = 64
DEFAULT_MEM_E = 2


class BudgetError(RuntimeError):
    """A machine received more bits in one round than the memory budget."""


def ceil_log2(x: int) -> int:
    assert x >= 1
    return (x - 1).bit_length()


@dataclass(frozen=True)
class Message:
    sender: int
    receiver: int
    bit_size: int
    payload: bytes | None = None

    def __post_init__(self) -> None:
        if self.payload is not None and self.bit_size != 8 * len(self.payload):
            raise ValueError("bit_size must equal serialized payload length")
        if self.bit_size < 0:
            raise ValueError("bit_size must be nonnegative")


@dataclass(frozen=True)
class RoundLogEntry:
    primitive: str
    rounds: int
    peak_bits: int

    def to_json(self) -> dict:
        return {"primitive": self.primitive, "rounds": self.rounds, "peak_bits": self.peak_bits}


class Cluster:
    """m set machines (ids 1..m), machine 1 also acting as central."""

    def __init__(self, m: int, n: int, mem_c: int | None = None, mem_e: int | None = None):
        assert m >= 1 and n >= 1
        if mem_c is None:
            mem_c = int(os.environ.get("MPC_MEM_C", DEFAULT_MEM_C))
        if mem_e is None:
            mem_e = int(os.environ.get("MPC_MEM_E", DEFAULT_MEM_E))
        self.m = m
        self.n = n
        self.mem_c = mem_c
        self.mem_e = mem_e
        self.central = 1
        self.budget_bits = mem_c * n * ceil_log2(n + 2) ** mem_e
        self.rounds = 0
        self.peak_inbox_bits = 0
        self.log: list[RoundLogEntry] = []

    # -- low level ---------------------------------------------------------

    def _account_round(self, bits_by_machine: dict[int, int]) -> int:
        """Advance one round; return the largest inbox of the round."""
        peak = 0
        for machine, bits in bits_by_machine.items():
            assert 1 <= machine <= self.m and bits >= 0
            if bits > self.budget_bits:
                err = BudgetError(
                    f"machine {machine} received {bits} bits in round "
                    f"{self.rounds + 1}, budget is {self.budget_bits}"
                )
                err.cluster = self  # partial log stays reachable for flushing
                raise err
            peak = max(peak, bits)
        self.rounds += 1
        self.peak_inbox_bits = max(self.peak_inbox_bits, peak)
        return peak

    def _log(self, primitive: str, rounds: int, peak_bits: int) -> None:
        self.log.append(RoundLogEntry(primitive, rounds, peak_bits))

    # -- primitives --------------------------------------------------------

    def step_round(self, deliveries, label: str = "step_round") -> None:
        """Deliver one round of point-to-point messages.

        deliveries: iterable of Message or (sender, receiver, bit_size).
        """
        inbox: dict[int, int] = {}
        for d in deliveries:
            if not isinstance(d, Message):
                d = Message(*d)
            inbox[d.receiver] = inbox.get(d.receiver, 0) + d.bit_size
        peak = self._account_round(inbox)
        self._log(label, 1, peak)

    def convergecast_sum(self, vectors, entry_bits: int, label: str = "convergecast_sum"):
        """Sum per-machine vectors along a fixed binary tree rooted at central.

        vectors: array of shape (m, width), one row per machine, nonnegative
        entries of at most entry_bits bits.  Costs ceil(log2 m) rounds; every
        merge message is accounted at width * (entry_bits + ceil(log2 m))
        bits, the worst-case width of a partial sum.  Returns the exact sum.
        """
        arr = np.asarray(vectors)
        assert arr.shape[0] == self.m
        width = arr.shape[1]
        bw = entry_bits + ceil_log2(self.m) if self.m > 1 else entry_bits
        partial = arr.copy()
        rounds_used = 0
        peak = 0
        stride = 1
        while stride < self.m:
            senders = np.arange(1 + stride, self.m + 1, 2 * stride)
            receivers = senders - stride
            partial[receivers - 1] += partial[senders - 1]
            inbox = {int(r): width * bw for r in receivers}
            peak = max(peak, self._account_round(inbox))
            rounds_used += 1
            stride *= 2
        assert rounds_used == (ceil_log2(self.m) if self.m > 1 else 0)
        self._log(label, rounds_used, peak)
        return partial[0]

    def broadcast(self, payload_bits: int, label: str = "broadcast") -> None:
        """Central sends the same payload to every other machine, 1 round."""
        inbox = {j: payload_bits for j in range(1, self.m + 1) if j != self.central}
        peak = self._account_round(inbox)
        self._log(label, 1, peak)

    def neighbor_exchange(self, messages, label: str = "neighbor_exchange") -> None:
        """One round of disjoint pairwise sends (at most 2 per receiver)."""
        inbox: dict[int, int] = {}
        seen: dict[int, int] = {}
        for d in messages:
            if not isinstance(d, Message):
                d = Message(*d)
            seen[d.receiver] = seen.get(d.receiver, 0) + 1
            if seen[d.receiver] > 2:
                raise ValueError(f"receiver {d.receiver} paired more than twice in one round")
            inbox[d.receiver] = inbox.get(d.receiver, 0) + d.bit_size
        peak = self._account_round(inbox)
        self._log(label, 1, peak)

    # -- composition -------------------------------------------------------

    def lane(self) -> "Cluster":
        """Fresh cluster for one member of a parallel batch."""
        return Cluster(self.m, self.n, self.mem_c, self.mem_e)

    def absorb_parallel(self, lanes, label: str) -> None:
        """Merge lanes run in parallel: max of rounds, sum of inbox peaks.

        Summing peaks over-counts a machine's per-round total (the lanes may
        peak in different rounds) so the budget check here is conservative.
        """
        lanes = list(lanes)
        rounds_used = max((l.rounds for l in lanes), default=0)
        bits_sum = sum(l.peak_inbox_bits for l in lanes)
        if bits_sum > self.budget_bits:
            err = BudgetError(
                f"parallel batch '{label}' inbox sum {bits_sum} exceeds budget {self.budget_bits}"
            )
            err.cluster = self
            raise err
        self.rounds += rounds_used
        self.peak_inbox_bits = max(self.peak_inbox_bits, bits_sum)
        self._log(label, rounds_used, bits_sum)

    @contextmanager
    def coalesce(self, label: str):
        """Collapse all entries logged inside the block into one entry."""
        mark = len(self.log)
        yield
        entries = self.log[mark:]
        del self.log[mark:]
        rounds_used = sum(e.rounds for e in entries)
        peak = max((e.peak_bits for e in entries), default=0)
        self._log(label, rounds_used, peak)

    def check_log_consistent(self) -> None:
        assert sum(e.rounds for e in self.log) == self.rounds


def log_to_jsonl(entries, meta: dict | None = None) -> str:
    """Serialize a round log, optionally preceded by one meta line."""
    import json

    lines = []
    if meta is not None:
        lines.append(json.dumps({"meta": meta}, sort_keys=True))
    for e in entries:
        lines.append(json.dumps(e.to_json(), sort_keys=True))
    return "\n".join(lines) + "\n"
