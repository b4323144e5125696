function pad(n) {
  return n < 10 ? '0' + n : '' + n;
}

function stamp(d) {
  return [d.getFullYear(), pad(d.getMonth() + 1), pad(d.getDate())].join('-');
}

module.exports = { stamp: stamp };
