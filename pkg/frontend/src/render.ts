/** Server-side SVG rendering of figure options (no DOM required). */

import * as echarts from "echarts";
import type { EChartsOption } from "echarts";

export function renderSvg(option: EChartsOption, width = 1500, height = 760): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  try {
    chart.setOption(option);
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}
