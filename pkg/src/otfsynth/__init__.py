"""On-the-fly directed controller synthesis with learned exploration policies."""
