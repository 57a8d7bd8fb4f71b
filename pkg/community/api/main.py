"""
PilotNet API
FastAPI endpoints for SBM generation and distributed community detection
"""

from fastapi import FastAPI, HTTPException, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
import sys
import os

import numpy as np

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../..')))

from community import __version__
from community.src.evaluation.metrics import misclustering_rate, relative_density
from community.src.experiments.pipeline import RunSpec, detect_graph
from community.src.sbm.model import GroundTruth, SbmParams, sample_sbm
from community.utils.errors import CommunityDetectionError
from community.utils.graph_io import graph_from_pairs
from community.utils.validators import (
    DetectRequest,
    DetectResponse,
    GenerateRequest,
    GenerateResponse,
)

# Initialize FastAPI app
app = FastAPI(
    title="PilotNet API",
    description="Distributed spectral community detection for stochastic block models",
    version=__version__,
    docs_url="/docs",
    redoc_url="/redoc"
)

# CORS middleware
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/", tags=["Root"])
async def root():
    """Root endpoint - API information"""
    return {
        "message": "PilotNet API",
        "version": __version__,
        "endpoints": {
            "generate": "/generate",
            "detect": "/detect",
            "example": "/examples/detect"
        },
        "documentation": {
            "swagger": "/docs",
            "redoc": "/redoc"
        }
    }


@app.get("/health", tags=["Health"])
async def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "version": __version__}


@app.post("/generate", response_model=GenerateResponse, tags=["Graphs"])
def generate_graph(request: GenerateRequest):
    """
    Sample a balanced SBM graph

    Returns the edge list (u < v) and the ground-truth block of every node.
    """
    try:
        params = SbmParams.balanced(request.num_nodes, request.num_blocks, request.nu, request.lam)
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    graph, truth = sample_sbm(params, request.seed)
    return GenerateResponse(
        num_nodes=graph.num_nodes,
        num_edges=graph.num_edges,
        edges=graph.edges().tolist(),
        labels=truth.labels.tolist(),
    )


@app.post("/detect", response_model=DetectResponse, tags=["Detection"])
def detect_communities(request: DetectRequest):
    """
    Run distributed detection on a posted edge list

    Node ids are compacted to 0..N-1 in increasing order; labels (when given)
    are indexed by the compacted id. Pilots are stratified when labels are
    given and uniform otherwise.
    """
    edges = np.asarray(request.edges, dtype=np.int64)
    loaded = graph_from_pairs(edges[:, 0], edges[:, 1], source="request")
    graph = loaded.graph
    N = graph.num_nodes

    truth = None
    if request.labels is not None:
        if len(request.labels) != N:
            raise HTTPException(
                status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
                detail=f"expected {N} labels, got {len(request.labels)}"
            )
        truth = GroundTruth(np.asarray(request.labels), request.num_blocks)

    spec = RunSpec(
        num_blocks=request.num_blocks,
        num_pilots=max(request.num_blocks, int(round(request.pilot_ratio * N))),
        num_workers=request.num_workers,
        seed=request.seed,
        policy="stratified" if truth is not None else "uniform",
        source="inline",
    )
    _, result = detect_graph(graph, spec, truth)

    node_ids = sorted(loaded.id_map, key=loaded.id_map.get)
    rate = None
    if truth is not None:
        rate, _ = misclustering_rate(result.labels, truth.labels, request.num_blocks)
    try:
        red = relative_density(graph, result.labels)
    except CommunityDetectionError:
        red = None

    return DetectResponse(
        labels=result.labels.tolist(),
        node_ids=node_ids,
        pseudo_center_nodes=result.pseudo_center_nodes.tolist(),
        broadcast_bytes=result.broadcast_bytes,
        degenerate_nodes=result.degenerate_nodes.tolist(),
        timings=result.timings,
        misclustering_rate=rate,
        relative_density=red,
    )


@app.get("/examples/detect", tags=["Examples"])
async def get_detect_example():
    """Get example detection input"""
    return {
        "description": "Two triangles joined by one bridge edge, split into K=2 communities",
        "example": DetectRequest.model_config["json_schema_extra"]["example"]
    }


@app.exception_handler(CommunityDetectionError)
async def detection_exception_handler(request: Request, exc: CommunityDetectionError):
    """Detection failures caused by the input graph"""
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)}
    )


@app.exception_handler(ValueError)
async def value_exception_handler(request: Request, exc: ValueError):
    """Invalid parameter combinations"""
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)}
    )


@app.exception_handler(Exception)
async def global_exception_handler(request, exc):
    """Global exception handler"""
    return JSONResponse(
        status_code=500,
        content={
            "error": "Internal server error",
            "detail": str(exc),
            "type": type(exc).__name__
        }
    )


if __name__ == "__main__":
    import uvicorn

    print("\n" + "="*80)
    print("🚀 Starting PilotNet API Server")
    print("="*80)
    print("\n📚 Documentation available at:")
    print("   • Swagger UI: http://localhost:8000/docs")
    print("   • ReDoc: http://localhost:8000/redoc")
    print("\n🔗 Endpoints:")
    print("   • GET  /health - Health check")
    print("   • POST /generate - Sample an SBM graph")
    print("   • POST /detect - Distributed community detection")
    print("   • GET  /examples/detect - Example detection payload")
    print("\n" + "="*80 + "\n")

    uvicorn.run(
        app,
        host="0.0.0.0",
        port=8000,
        log_level="info"
    )
