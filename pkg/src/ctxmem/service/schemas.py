"""Pydantic request/response models for the /v1 API."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field


class ProvenanceModel(BaseModel):
    appName: str = ""
    windowTitle: str = ""
    url: Optional[str] = None


class ApiError(BaseModel):
    code: Literal["badRequest", "notFound", "conflict", "providerUnavailable", "internal"]
    message: str
    detail: Optional[str] = None


class SessionCreateRequest(BaseModel):
    sessionId: Optional[str] = None


class SessionResponse(BaseModel):
    sessionId: str
    manifest: dict


class SnippetCaptureRequest(BaseModel):
    text: Optional[str] = None
    imageBase64: Optional[str] = None
    userMemo: Optional[str] = None
    provenance: ProvenanceModel


class ObservationCaptureRequest(BaseModel):
    imageBase64: str
    provenance: ProvenanceModel


class CaptureResponse(BaseModel):
    memoryId: Optional[str]
    sequence: Optional[int] = None
    placement: Optional[dict] = None
    modified: list[str] = Field(default_factory=list)
    decisions: list[dict] = Field(default_factory=list)
    hidden: bool = False


class ChatRequest(BaseModel):
    message: str
    explicitMemoryIds: list[str] = Field(default_factory=list)
    explicitBranchIds: list[str] = Field(default_factory=list)
    probe: bool = False


class ChatCandidate(BaseModel):
    label: Literal["A", "B"]
    text: str
    references: list[dict] = Field(default_factory=list)


class ChatResponse(BaseModel):
    queryId: str
    pendingChoice: bool
    text: Optional[str] = None
    references: list[dict] = Field(default_factory=list)
    gate: Optional[dict] = None
    candidates: Optional[list[ChatCandidate]] = None


class ProbeChoiceRequest(BaseModel):
    queryId: str
    chosen: Literal["A", "B"]


class MemoryModel(BaseModel):
    id: str
    source: str
    title: str
    summary: str
    contextSentence: str
    tags: list[str]
    rawText: Optional[str]
    imageRef: Optional[str]
    userMemo: Optional[str]
    provenance: dict
    capturedAt: int
    branchId: Optional[str]
    hidden: bool
    archived: bool
    updatedBadge: bool
    perceptualHash: Optional[str]
    sequence: int


class BranchModel(BaseModel):
    id: str
    name: str
    summary: str
    tags: list[str]
    parentId: Optional[str]
    createdAt: int


class LinkModel(BaseModel):
    memoryA: str
    memoryB: str
    score: float


class TreeResponse(BaseModel):
    sessionId: str
    version: int
    summary: str
    memories: list[MemoryModel]
    branches: list[BranchModel]
    links: list[LinkModel]


class TimelineResponse(BaseModel):
    sessionId: str
    version: int
    memories: list[MemoryModel]


class SummaryResponse(BaseModel):
    summary: str
    version: int


class MoveRequest(BaseModel):
    memoryId: str
    targetBranchId: Optional[str] = None


class GroupRequest(BaseModel):
    memoryIds: list[str]
    name: Optional[str] = None


class ReorgRequest(BaseModel):
    instruction: str
    memoryIds: Optional[list[str]] = None
    branchIds: Optional[list[str]] = None


class MemoryEditRequest(BaseModel):
    title: Optional[str] = None
    summary: Optional[str] = None
    contextSentence: Optional[str] = None
    tags: Optional[list[str]] = None
    userMemo: Optional[str] = None


class VisibilityRequest(BaseModel):
    hidden: bool
    archived: bool


class MutationResponse(BaseModel):
    """Every mutation returns the authoritative tree so clients converge
    in a single round-trip."""
    result: dict = Field(default_factory=dict)
    tree: TreeResponse


class ScoreRequest(BaseModel):
    query: str
    now: Optional[int] = None


class ScoreResponse(BaseModel):
    query: str
    scores: list[dict]


class JobResponse(BaseModel):
    jobId: str
    status: Literal["pending", "done", "error"]
    result: Optional[Any] = None
    error: Optional[ApiError] = None
