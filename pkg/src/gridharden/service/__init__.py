"""HTTP service: FastAPI app plus request/response schemas."""
