/** SVG and PNG export. The SVG download is the server's bytes verbatim;
 * PNG rasterizes client-side at 2x scale. */

export interface SvgSize {
  width: number;
  height: number;
}

export function parseSvgSize(svg: string): SvgSize {
  const width = svg.match(/\bwidth="(\d+)"/);
  const height = svg.match(/\bheight="(\d+)"/);
  if (!width || !height) {
    throw new Error("svg has no integer width/height attributes");
  }
  return { width: Number(width[1]), height: Number(height[1]) };
}

export function pngDimensions(svg: string, scale = 2): SvgSize {
  const size = parseSvgSize(svg);
  return { width: size.width * scale, height: size.height * scale };
}

function download(blob: Blob, filename: string): void {
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}

export function exportSvg(svg: string, filename = "context.svg"): void {
  download(new Blob([svg], { type: "image/svg+xml" }), filename);
}

export async function exportPng(svg: string, filename = "context.png", scale = 2): Promise<void> {
  const { width, height } = pngDimensions(svg, scale);
  const image = new Image(width, height);
  const url = URL.createObjectURL(new Blob([svg], { type: "image/svg+xml" }));
  try {
    await new Promise<void>((resolve, reject) => {
      image.onload = () => resolve();
      image.onerror = () => reject(new Error("could not rasterize the SVG"));
      image.src = url;
    });
    const canvas = document.createElement("canvas");
    canvas.width = width;
    canvas.height = height;
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      throw new Error("canvas 2d context unavailable");
    }
    ctx.drawImage(image, 0, 0, width, height);
    const blob = await new Promise<Blob>((resolve, reject) =>
      canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("png encode failed"))), "image/png"),
    );
    download(blob, filename);
  } finally {
    URL.revokeObjectURL(url);
  }
}
