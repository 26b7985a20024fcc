"""
Quantum Feedback Network Calculus - FastAPI Backend
Reduce, convert and check network documents over HTTP
"""

import logging
import os
import sys

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from errors import QFNError
from linalg_core import TOL_ENV_VAR
from network_endpoints import network_router

LOG_LEVEL = os.getenv("QFN_LOG_LEVEL", "WARNING").upper()
logging.basicConfig(stream=sys.stderr, level=LOG_LEVEL, format="[%(name)s] %(levelname)s %(message)s")
logger = logging.getLogger("qfn.app")

APP_VERSION = "1.0.0"

app = FastAPI(title="Quantum Feedback Network API", version=APP_VERSION)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=False,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(network_router)


@app.exception_handler(QFNError)
async def qfn_error_handler(request: Request, exc: QFNError):
    """Calculus errors map to 400 (bad input) or 422 (reduction undefined)"""
    logger.warning(f"[{request.url.path}] {type(exc).__name__}: {exc.detail}")
    return JSONResponse(status_code=exc.status_code, content=exc.to_dict())


# ============================================
# API ENDPOINTS
# ============================================

@app.get("/")
async def root():
    return {"status": "ok", "app": "Quantum Feedback Network API", "version": APP_VERSION}


@app.get("/health")
async def health():
    return {"status": "healthy", "tol_override": os.getenv(TOL_ENV_VAR)}
