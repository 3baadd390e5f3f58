// Thin typed client over the service's JSON API.

import type {
  CompleteResponse,
  ConfirmResponse,
  Project,
  ProjectSettings,
  Segment,
} from "./types.js";

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public readonly status: number, public readonly code: string, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "",
              private readonly fetchFn: FetchLike = (input, init) => fetch(input, init)) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const data = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, data.code ?? "error",
        data.message ?? response.statusText);
    }
    return data as T;
  }

  createProject(name: string, settings?: Partial<ProjectSettings>): Promise<Project> {
    return this.request("POST", "/projects", settings ? { name, settings } : { name });
  }

  listProjects(): Promise<Project[]> {
    return this.request("GET", "/projects");
  }

  getSettings(projectId: number): Promise<ProjectSettings> {
    return this.request("GET", `/projects/${projectId}/settings`);
  }

  putSettings(projectId: number, settings: ProjectSettings): Promise<ProjectSettings> {
    return this.request("PUT", `/projects/${projectId}/settings`, settings);
  }

  uploadTm(projectId: number, content: string): Promise<{ added: number; warnings: string[] }> {
    return this.request("POST", `/projects/${projectId}/tm`, { content });
  }

  uploadTermbase(projectId: number, content: string): Promise<{ added: number; warnings: string[] }> {
    return this.request("POST", `/projects/${projectId}/termbase`, { content });
  }

  ingestDocument(projectId: number, text: string): Promise<Segment[]> {
    return this.request("POST", `/projects/${projectId}/document`, { text });
  }

  listSegments(projectId: number): Promise<Segment[]> {
    return this.request("GET", `/projects/${projectId}/segments`);
  }

  complete(segmentId: number, lockedText: string, dangling: string | null,
  ): Promise<CompleteResponse> {
    return this.request("POST", `/segments/${segmentId}/complete`, {
      locked_text: lockedText,
      dangling,
    });
  }

  confirm(segmentId: number, finalTarget: string): Promise<ConfirmResponse> {
    return this.request("POST", `/segments/${segmentId}/confirm`, {
      final_target: finalTarget,
    });
  }
}
