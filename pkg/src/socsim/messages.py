"""Wire message types and the line-oriented log encoding.

Four message kinds exist: member messages carry pairwise opinions plus a
keep-alive, head messages carry the agreed cluster structure, request and
response messages implement the merge agreement. Log records are
``time;type;from;to|*;payload`` lines with opinions as ``b,d,u,a``.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Union

from .opinions import Opinion, format_opinion, parse_opinion


class MemberMsg(NamedTuple):
    sender: int
    head: int
    opinions: tuple[tuple[int, int, Opinion], ...]


class HeadMsg(NamedTuple):
    head: int
    agent_members: frozenset[int]
    human_members: frozenset[int]


class RequestMsg(NamedTuple):
    head: int
    members: frozenset[int]


class ResponseMsg(NamedTuple):
    responder: int
    accepted: bool
    forward_to: Optional[int] = None
    forward_members: Optional[frozenset[int]] = None


Message = Union[MemberMsg, HeadMsg, RequestMsg, ResponseMsg]

_TYPE_TAGS = {MemberMsg: "cm", HeadMsg: "ch", RequestMsg: "req", ResponseMsg: "res"}


def message_type(msg: Message) -> str:
    return _TYPE_TAGS[type(msg)]


def _ids(values) -> str:
    return ",".join(str(v) for v in sorted(values))


def encode_payload(msg: Message) -> str:
    if isinstance(msg, MemberMsg):
        fields = [str(msg.head)]
        fields.extend(f"{i}:{j}:{format_opinion(op)}" for i, j, op in msg.opinions)
        return "|".join(fields)
    if isinstance(msg, HeadMsg):
        return f"{msg.head}|{_ids(msg.agent_members)}|{_ids(msg.human_members)}"
    if isinstance(msg, RequestMsg):
        return f"{msg.head}|{_ids(msg.members)}"
    if isinstance(msg, ResponseMsg):
        fwd = "-" if msg.forward_to is None else str(msg.forward_to)
        fwd_members = "-" if msg.forward_members is None else _ids(msg.forward_members)
        return f"{int(msg.accepted)}|{fwd}|{fwd_members}"
    raise TypeError(f"unknown message type: {msg!r}")


def encode_record(time: float, msg: Message, sender: int, target: Optional[int]) -> str:
    to = "*" if target is None else str(target)
    return f"{time!r};{message_type(msg)};{sender};{to};{encode_payload(msg)}"


def decode_record(line: str) -> tuple[float, Message, int, Optional[int]]:
    parts = line.rstrip("\n").split(";")
    if len(parts) != 5:
        raise ValueError(f"malformed log record: {line!r}")
    time_s, tag, sender_s, to_s, payload = parts
    time = float(time_s)
    sender = int(sender_s)
    target = None if to_s == "*" else int(to_s)
    fields = payload.split("|")
    if tag == "cm":
        opinions = []
        for item in fields[1:]:
            i_s, j_s, op_s = item.split(":")
            opinions.append((int(i_s), int(j_s), parse_opinion(op_s)))
        msg: Message = MemberMsg(sender, int(fields[0]), tuple(opinions))
    elif tag == "ch":
        msg = HeadMsg(int(fields[0]), _parse_ids(fields[1]), _parse_ids(fields[2]))
    elif tag == "req":
        msg = RequestMsg(int(fields[0]), _parse_ids(fields[1]))
    elif tag == "res":
        fwd = None if fields[1] == "-" else int(fields[1])
        fwd_members = None if fields[2] == "-" else _parse_ids(fields[2])
        msg = ResponseMsg(sender, fields[0] == "1", fwd, fwd_members)
    else:
        raise ValueError(f"unknown message tag {tag!r} in {line!r}")
    return time, msg, sender, target


def _parse_ids(text: str) -> frozenset[int]:
    if not text:
        return frozenset()
    return frozenset(int(v) for v in text.split(","))
