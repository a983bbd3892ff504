"""Payment channel network simulator with fee-aware routing."""
