"""Network manager: slot reallocation and QoS subscriptions.

Requests enter mid-run (scheduled injections), wait for the server's next
control section, and are applied as one new schedule version. The new
slot map is broadcast in that control section, re-broadcast in the
following ones, and takes effect at the next superframe boundary. A
rejected request never aborts the run; the reason is recorded.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Union

from pydantic import ValidationError

from hybrid_mac.config import NS_PER_MS
from hybrid_mac.contracts import (
    ReallocateRequest,
    SlotAssignment,
    SubscribeRequest,
    SuperframeConfig,
    slot_map_problems,
)
from hybrid_mac.engine import Simulator
from hybrid_mac.mac_hybrid import SlotMap

if TYPE_CHECKING:
    from hybrid_mac.contracts import HybridConfig
    from hybrid_mac.diagnostics import Diagnostics
    from hybrid_mac.mac_hybrid import ServerNode

logger = logging.getLogger(__name__)

ManagerRequest = Union[ReallocateRequest, SubscribeRequest]


class SlotAllocationError(ValueError):
    """A reallocation or subscription cannot be honoured."""


@dataclass(frozen=True)
class Grant:
    node: int
    slots: tuple[int, ...]
    version: int
    at_ns: int


@dataclass(frozen=True)
class Rejection:
    action: str
    reason: str
    at_ns: int


@dataclass(frozen=True)
class AppliedMap:
    version: int
    effective_from: int
    at_ns: int
    n_tdma: int
    tau_tdma_ns: int


def slots_needed(superframe_ns: int, deadline_ns: int, period_ns: int) -> int:
    """Slots per superframe keeping the average slot spacing within min(deadline, period)."""
    return max(1, math.ceil(superframe_ns / min(deadline_ns, period_ns)))


class NetworkManager:
    """Server-side daemon owning the schedule."""

    def __init__(
        self,
        sim: Simulator,
        server: "ServerNode",
        settings: "HybridConfig",
        min_slot_ns: int,
        nodes: set[int],
        diagnostics: "Diagnostics",
        is_associated: Callable[[int], bool] = lambda node: True,
    ) -> None:
        self.sim = sim
        self.server = server
        self.settings = settings
        self.min_slot_ns = min_slot_ns
        self.nodes = nodes
        self.diagnostics = diagnostics
        self.is_associated = is_associated
        self.grants: list[Grant] = []
        self.rejections: list[Rejection] = []
        self.applied: list[AppliedMap] = []
        self._pending: list[ManagerRequest] = []
        self._rebroadcast: dict[int, SlotMap] = {}
        server.ctl_open_hooks.append(self.on_ctl_open)

    @property
    def current(self) -> SlotMap:
        return self.server.current_map

    def submit(self, request: ManagerRequest) -> None:
        """Queue a request for the next control section."""
        self._pending.append(request)
        logger.info("manager request queued at t=%d ns: %s", self.sim.now, request)

    # ------------------------------------------------------------------
    # Validation
    # ------------------------------------------------------------------

    def _build(
        self,
        base: SlotMap,
        n_tdma: int,
        tau_tdma_ns: int,
        assignments: list[SlotAssignment],
        effective_from: int,
    ) -> SlotMap:
        problems: list[str] = []
        superframe = base.superframe
        try:
            candidate = SuperframeConfig(
                superframe_ns=superframe.superframe_ns,
                n_tdma=n_tdma,
                tau_tdma_ns=tau_tdma_ns,
                t_ctl_ns=superframe.t_ctl_ns,
                beacon_airtime_ns=superframe.beacon_airtime_ns,
                guard_ns=superframe.guard_ns,
            )
        except ValidationError as exc:
            raise SlotAllocationError(
                "; ".join(str(error["msg"]) for error in exc.errors())
            ) from exc
        if tau_tdma_ns < self.min_slot_ns:
            problems.append(
                f"tau_tdma_ns ({tau_tdma_ns}) below critical airtime + guard ({self.min_slot_ns})"
            )
        limit = self.settings.max_tdma_fraction * superframe.superframe_ns
        if candidate.t_tdma_ns > limit:
            problems.append(
                f"TDMA section ({candidate.t_tdma_ns} ns) exceeds max_tdma_fraction of the superframe ({limit:.0f} ns)"
            )
        problems.extend(slot_map_problems(assignments, n_tdma, self.nodes, "assignments"))
        if problems:
            raise SlotAllocationError("; ".join(problems))
        return SlotMap(
            version=base.version + 1,
            effective_from=effective_from,
            superframe=candidate,
            assignments=tuple(sorted((a.slot, a.node) for a in assignments)),
        )

    def reallocate_slots(self, request: ReallocateRequest, base: SlotMap, effective_from: int) -> SlotMap:
        """Validate a reallocation against the superframe invariants.

        Raises:
            SlotAllocationError: Overlapping ownership, undersized slots, or a
                TDMA section that no longer fits the superframe
        """
        superframe = base.superframe
        n_tdma = superframe.n_tdma if request.n_tdma is None else request.n_tdma
        tau = superframe.tau_tdma_ns if request.tau_tdma_ns is None else request.tau_tdma_ns
        if request.assignments is not None:
            assignments = list(request.assignments)
        else:
            assignments = [SlotAssignment(slot=slot, node=node) for slot, node in base.assignments]
        return self._build(base, n_tdma, tau, assignments, effective_from)

    def subscribe(
        self, request: SubscribeRequest, base: SlotMap, effective_from: int
    ) -> tuple[SlotMap, tuple[int, ...]]:
        """Grant enough slots for the requested deadline and update rate.

        Free slots are granted lowest index first; the TDMA section grows
        when the current one is full.

        Raises:
            SlotAllocationError: Node not associated or insufficient TDMA capacity
        """
        if request.node not in self.nodes or not self.is_associated(request.node):
            raise SlotAllocationError(f"node {request.node} is not associated")
        superframe = base.superframe
        needed = slots_needed(
            superframe.superframe_ns,
            round(request.deadline_ms * NS_PER_MS),
            round(request.period_ms * NS_PER_MS),
        )
        owned = base.slots_of(request.node)
        if len(owned) >= needed:
            return base, tuple(owned[:needed])
        taken = {slot for slot, _ in base.assignments}
        free = [slot for slot in range(1, superframe.n_tdma + 1) if slot not in taken]
        missing = needed - len(owned)
        granted = free[:missing]
        n_tdma = superframe.n_tdma
        while len(granted) < missing:
            n_tdma += 1
            granted.append(n_tdma)
        assignments = [SlotAssignment(slot=slot, node=node) for slot, node in base.assignments]
        assignments.extend(SlotAssignment(slot=slot, node=request.node) for slot in granted)
        try:
            slot_map = self._build(base, n_tdma, superframe.tau_tdma_ns, assignments, effective_from)
        except SlotAllocationError as exc:
            raise SlotAllocationError(
                f"insufficient TDMA capacity for {needed} slots per superframe: {exc}"
            ) from exc
        return slot_map, tuple(sorted(owned + granted))

    # ------------------------------------------------------------------
    # Control-section processing
    # ------------------------------------------------------------------

    def on_ctl_open(self, frame_index: int) -> None:
        repeat = self._rebroadcast.pop(frame_index, None)
        if repeat is not None:
            self.server.broadcast_slot_map(repeat)
        if not self._pending:
            return
        now = self.sim.now
        reallocations = [r for r in self._pending if isinstance(r, ReallocateRequest)]
        subscriptions = sorted(
            (r for r in self._pending if isinstance(r, SubscribeRequest)),
            key=lambda r: -r.priority,
        )
        self._pending = []
        base = self.current
        working = base
        effective_from = frame_index + 1
        granted: list[tuple[int, tuple[int, ...]]] = []
        for request in [*reallocations, *subscriptions]:
            try:
                if isinstance(request, ReallocateRequest):
                    candidate = self.reallocate_slots(request, working, effective_from)
                else:
                    candidate, slots = self.subscribe(request, working, effective_from)
                    granted.append((request.node, slots))
                    if candidate is working:
                        continue
            except SlotAllocationError as exc:
                action = "reallocate" if isinstance(request, ReallocateRequest) else "subscribe"
                self.rejections.append(Rejection(action=action, reason=str(exc), at_ns=now))
                self.diagnostics.report("manager_rejection", now, f"{action} rejected: {exc}")
                continue
            working = SlotMap(
                version=base.version + 1,
                effective_from=effective_from,
                superframe=candidate.superframe,
                assignments=candidate.assignments,
            )
        self.grants.extend(Grant(node, slots, working.version, now) for node, slots in granted)
        if working is base:
            return
        self.apply(working, frame_index)

    def apply(self, slot_map: SlotMap, frame_index: int) -> None:
        """Install a new version at the server and schedule its broadcasts."""
        self.server.install_map(slot_map)
        self.server.broadcast_slot_map(slot_map)
        for offset in range(1, self.settings.slot_map_repeats):
            self._rebroadcast[frame_index + offset] = slot_map
        self.applied.append(
            AppliedMap(
                version=slot_map.version,
                effective_from=slot_map.effective_from,
                at_ns=self.sim.now,
                n_tdma=slot_map.superframe.n_tdma,
                tau_tdma_ns=slot_map.superframe.tau_tdma_ns,
            )
        )
        logger.info(
            "slot map v%d (n_tdma=%d) effective from frame %d",
            slot_map.version,
            slot_map.superframe.n_tdma,
            slot_map.effective_from,
        )
