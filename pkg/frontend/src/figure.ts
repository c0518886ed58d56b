/**
 * Six-panel figure layout for one traffic profile: overall throughput,
 * collisions and Jain's index on top; per-AC throughput, mean queueing
 * delay and time between successes on the bottom. Delay/inter-success
 * panels are log-scaled with 10 ms and 100 ms deadline guides. Mean lines
 * carry a +/- one-standard-deviation band across seeds.
 */

import type { EChartsOption, SeriesOption } from "echarts";

import { ACS, AcName, RunRow } from "./schema.js";
import {
  SeriesPoints,
  acMetric,
  aggregateMetric,
  protocolsIn,
  stationCountsIn,
} from "./aggregate.js";

const PROTOCOL_STYLE: Record<string, { color: string; dash: "solid" | "dashed" }> = {
  "eca": { color: "#1f77b4", dash: "dashed" },
  "eca-dr": { color: "#d62728", dash: "solid" },
  "csma-ca": { color: "#7f7f7f", dash: "dotted" as "dashed" },
};

const AC_COLOR: Record<AcName, string> = {
  VO: "#d62728",
  VI: "#ff7f0e",
  BE: "#1f77b4",
  BK: "#2ca02c",
};

interface Panel {
  title: string;
  index: number;
  log?: boolean;
  guides?: number[]; // horizontal guide values
}

function gridPosition(index: number) {
  const col = index % 3;
  const row = Math.floor(index / 3);
  return {
    left: `${6 + col * 32.5}%`,
    top: row === 0 ? "8%" : "58%",
    width: "26%",
    height: "34%",
  };
}

function bandSeries(
  name: string,
  points: SeriesPoints,
  gridIndex: number,
  color: string,
  dash: "solid" | "dashed",
  scale: (v: number) => number,
  log: boolean,
): SeriesOption[] {
  const xs = [...points.keys()];
  const mean = xs.map((x) => [x, scale(points.get(x)!.mean)]);
  const lower = xs.map((x) => {
    const p = points.get(x)!;
    let v = scale(p.mean - p.std);
    if (log && v <= 0) v = scale(p.mean) / 10;
    return [x, v];
  });
  const upper = xs.map((x) => [x, scale(points.get(x)!.mean + points.get(x)!.std)]);
  const series: SeriesOption[] = [
    {
      name,
      type: "line",
      data: mean,
      xAxisIndex: gridIndex,
      yAxisIndex: gridIndex,
      symbolSize: 5,
      lineStyle: { color, type: dash, width: 2 },
      itemStyle: { color },
      emphasis: { disabled: true },
    },
  ];
  if (xs.length > 0) {
    series.push(
      {
        name: `${name} band low`,
        type: "line",
        data: lower,
        xAxisIndex: gridIndex,
        yAxisIndex: gridIndex,
        symbol: "none",
        lineStyle: { opacity: 0 },
        stack: `${name}-${gridIndex}`,
        tooltip: { show: false },
      },
      {
        name: `${name} band`,
        type: "line",
        data: upper.map(([x, v], i) => [x, (v as number) - (lower[i][1] as number)]),
        xAxisIndex: gridIndex,
        yAxisIndex: gridIndex,
        symbol: "none",
        lineStyle: { opacity: 0 },
        areaStyle: { color, opacity: 0.15 },
        stack: `${name}-${gridIndex}`,
        tooltip: { show: false },
      },
    );
  }
  return series;
}

export function buildFigure(rows: RunRow[], profile: string): EChartsOption {
  const data = rows.filter((r) => r.profile === profile);
  if (data.length === 0) {
    throw new Error(`no rows for profile ${profile}`);
  }
  const protocols = protocolsIn(data);
  const counts = stationCountsIn(data);

  const panels: Panel[] = [
    { title: "Overall throughput (Mbps)", index: 0 },
    { title: "Collisions per run", index: 1 },
    { title: "Jain's fairness index", index: 2 },
    { title: "Throughput per AC (Mbps)", index: 3 },
    { title: "Mean delay per AC (ms)", index: 4, log: true, guides: [10, 100] },
    { title: "Time between successes per AC (ms)", index: 5, log: true, guides: [10, 100] },
  ];

  const series: SeriesOption[] = [];
  for (const protocol of protocols) {
    const style = PROTOCOL_STYLE[protocol] ?? { color: "#333333", dash: "solid" as const };
    series.push(
      ...bandSeries(
        protocol,
        aggregateMetric(data, protocol, (r) => r.throughput_bps),
        0, style.color, style.dash, (v) => v / 1e6, false,
      ),
      ...bandSeries(
        `${protocol} collisions`,
        aggregateMetric(data, protocol, (r) => r.collisions),
        1, style.color, style.dash, (v) => v, false,
      ),
      ...bandSeries(
        `${protocol} jain`,
        aggregateMetric(data, protocol, (r) => r.jain_overall),
        2, style.color, style.dash, (v) => v, false,
      ),
    );
    for (const ac of ACS) {
      series.push(
        ...bandSeries(
          `${ac} ${protocol}`,
          aggregateMetric(data, protocol, acMetric(ac, "throughput_bps")),
          3, AC_COLOR[ac], style.dash, (v) => v / 1e6, false,
        ),
        ...bandSeries(
          `${ac} ${protocol} delay`,
          aggregateMetric(data, protocol, acMetric(ac, "mean_delay_us")),
          4, AC_COLOR[ac], style.dash, (v) => v / 1e3, true,
        ),
        ...bandSeries(
          `${ac} ${protocol} gap`,
          aggregateMetric(data, protocol, acMetric(ac, "mean_inter_success_us")),
          5, AC_COLOR[ac], style.dash, (v) => v / 1e3, true,
        ),
      );
    }
  }

  // deadline guides on the log panels
  for (const panel of panels) {
    if (!panel.guides) continue;
    series.push({
      name: `guides ${panel.index}`,
      type: "line",
      xAxisIndex: panel.index,
      yAxisIndex: panel.index,
      data: [],
      markLine: {
        silent: true,
        symbol: "none",
        lineStyle: { color: "#999999", type: "dotted" },
        data: panel.guides.map((v) => ({ yAxis: v })),
      },
    });
  }

  return {
    animation: false,
    title: panels.map((p) => ({
      text: p.title,
      textStyle: { fontSize: 12 },
      left: gridPosition(p.index).left,
      top: p.index < 3 ? "2%" : "52%",
    })),
    grid: panels.map((p) => gridPosition(p.index)),
    xAxis: panels.map((p) => ({
      gridIndex: p.index,
      type: "value" as const,
      name: "stations",
      nameLocation: "middle" as const,
      nameGap: 22,
      min: counts[0],
      max: counts[counts.length - 1],
    })),
    yAxis: panels.map((p) => ({
      gridIndex: p.index,
      type: (p.log ? "log" : "value") as "log" | "value",
      ...(p.index === 2 ? { min: 0, max: 1 } : {}),
    })),
    legend: {
      bottom: 0,
      data: protocols.concat(ACS.flatMap((ac) => protocols.map((p) => `${ac} ${p}`))),
      textStyle: { fontSize: 10 },
    },
    series,
  };
}
