// Typed client for the annotation service API.

export interface PendingItem {
  annotator: string
  recipe: string
  document_id: string
  document_url: string
  item_kind: string
  item_ordinal: number
  item_text: string
  allowed_labels: string[]
  generated_ingredients: string[]
  generated_tasks: string[]
}

export interface Progress {
  total: number
  recorded: number
  auto_resolved: number
  pending: number
}

export interface PendingResponse {
  item: PendingItem | null
  progress: Progress
}

export interface RecordPayload {
  annotator: string
  recipe: string
  document_id: string
  item_kind: string
  item_ordinal: number
  label: string
}

export interface RecordModel extends RecordPayload {
  timestamp: string
}

export interface RecordResult {
  status: 'stored' | 'duplicate' | 'upgraded'
  record: RecordModel
  auto_resolved: RecordModel[]
}

export class ConflictError extends Error {
  existing: RecordModel | null

  constructor(message: string, existing: RecordModel | null) {
    super(message)
    this.existing = existing
  }
}

async function parseError(response: Response): Promise<never> {
  let detail: unknown
  try {
    detail = (await response.json()).detail
  } catch {
    detail = response.statusText
  }
  if (response.status === 409 && detail && typeof detail === 'object') {
    const d = detail as { message?: string; existing?: RecordModel }
    throw new ConflictError(d.message ?? 'conflict', d.existing ?? null)
  }
  throw new Error(typeof detail === 'string' ? detail : JSON.stringify(detail))
}

export class ApiClient {
  constructor(private base: string = '') {}

  private url(path: string): string {
    return `${this.base}${path}`
  }

  async fetchPending(annotator: string): Promise<PendingResponse> {
    const response = await fetch(
      this.url(`/api/pending?annotator=${encodeURIComponent(annotator)}`),
    )
    if (!response.ok) await parseError(response)
    return response.json()
  }

  async fetchProgress(annotator: string): Promise<Progress> {
    const response = await fetch(
      this.url(`/api/progress?annotator=${encodeURIComponent(annotator)}`),
    )
    if (!response.ok) await parseError(response)
    return response.json()
  }

  async submitRecord(payload: RecordPayload): Promise<RecordResult> {
    const response = await fetch(this.url('/api/record'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(payload),
    })
    if (!response.ok) await parseError(response)
    return response.json()
  }

  async closeDocument(
    annotator: string,
    recipe: string,
    documentId: string,
  ): Promise<void> {
    const response = await fetch(this.url('/api/close_document'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ annotator, recipe, document_id: documentId }),
    })
    if (!response.ok) await parseError(response)
  }

  async fetchExport(): Promise<string> {
    const response = await fetch(this.url('/api/export'))
    if (!response.ok) await parseError(response)
    return response.text()
  }
}
