"""MCP 서버 패키지 (tools 는 app_mcp.tools 에서 등록)"""
