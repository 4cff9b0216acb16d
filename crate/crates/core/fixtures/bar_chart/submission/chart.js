var margin = { top: 30, bottom: 20 };
var width = 600, height = 400;
var svg = d3.select("body").append("svg").attr("id", "chart")
  .attr("width", width).attr("height", height);

d3.csv("data.csv").then(function (rows) {
  rows.forEach(function (d) { d.value = +d.value; });
  var x = d3.scaleBand().domain(rows.map(function (d) { return d.name; }))
    .range([40, width - 20]).padding(0.2);
  var y = d3.scaleLinear().domain([0, 70]).range([height - 50, 0]);
  var tip = d3.select("body").append("div").attr("class", "tooltip").style("opacity", 0);

  svg.append("text").attr("class", "title").attr("x", width / 2).attr("y", 20)
    .text("Sales by product");
  svg.append("g").attr("class", "x-axis")
    .attr("transform", "translate(0," + (height - 50) + ")")
    .call(d3.axisBottom(x));
  svg.append("g").attr("id", "bars").selectAll("rect").data(rows).enter().append("rect")
    .attr("class", "bar")
    .attr("x", function (d) { return x(d.name); })
    .attr("width", x.bandwidth())
    .attr("y", function (d) { return y(d.value); })
    .attr("height", function (d) { return height - 50 - y(d.value); })
    .attr("fill", "steelblue")
    .on("mouseover", function (d) {
      tip.style("opacity", 1).text("value: " + d.value);
    })
    .on("mouseout", function () { tip.style("opacity", 0); });
});
